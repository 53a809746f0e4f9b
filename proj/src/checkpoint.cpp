#include "supalign/checkpoint.hpp"

#include <array>
#include <bit>
#include <cstring>
#include <fstream>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include "supalign/error.hpp"

namespace supalign {

namespace {

constexpr std::array<char, 5> kMagic = {'S', 'P', 'A', 'L', '1'};
constexpr std::uint32_t kFlagOutputRelu = 1U;
constexpr std::uint64_t kMaxElements = std::uint64_t{1} << 40;

class Writer {
 public:
  explicit Writer(const std::filesystem::path& path) : path_(path) {}

  void u8(std::uint8_t v) { buf_.push_back(static_cast<char>(v)); }
  void u32(std::uint32_t v) { put_le(v); }
  void u64(std::uint64_t v) { put_le(v); }
  void f32(double v) { put_le(std::bit_cast<std::uint32_t>(static_cast<float>(v))); }

  template <typename Derived>
  void block(const Eigen::DenseBase<Derived>& m) {
    for (Eigen::Index r = 0; r < m.rows(); ++r) {
      for (Eigen::Index c = 0; c < m.cols(); ++c) f32(static_cast<double>(m(r, c)));
    }
  }

  void header(const CheckpointMeta& meta, const std::vector<std::uint64_t>& dims) {
    buf_.insert(buf_.end(), kMagic.begin(), kMagic.end());
    u8(static_cast<std::uint8_t>(meta.kind));
    u32(meta.flags);
    u64(meta.seed);
    u64(meta.config_hash);
    u32(static_cast<std::uint32_t>(dims.size()));
    for (const auto d : dims) u64(d);
  }

  void commit() {
    if (path_.has_parent_path()) {
      std::error_code ec;
      std::filesystem::create_directories(path_.parent_path(), ec);
    }
    std::ofstream out(path_, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot open " + path_.string() + " for writing");
    out.write(buf_.data(), static_cast<std::streamsize>(buf_.size()));
    if (!out) throw IoError("write failed: " + path_.string());
  }

 private:
  template <typename T>
  void put_le(T v) {
    for (std::size_t i = 0; i < sizeof(T); ++i) {
      buf_.push_back(static_cast<char>((v >> (8 * i)) & 0xFFU));
    }
  }

  std::filesystem::path path_;
  std::vector<char> buf_;
};

class Reader {
 public:
  explicit Reader(const std::filesystem::path& path) : path_(path.string()) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open " + path_);
    buf_.assign(std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>());
  }

  std::uint8_t u8() { return static_cast<std::uint8_t>(take(1)[0]); }
  std::uint32_t u32() { return get_le<std::uint32_t>(); }
  std::uint64_t u64() { return get_le<std::uint64_t>(); }
  float f32() { return std::bit_cast<float>(get_le<std::uint32_t>()); }

  Mat matrix(Eigen::Index rows, Eigen::Index cols) {
    Mat m(rows, cols);
    for (Eigen::Index r = 0; r < rows; ++r) {
      for (Eigen::Index c = 0; c < cols; ++c) m(r, c) = f32();
    }
    return m;
  }
  Vec vector(Eigen::Index n) {
    Vec v(n);
    for (Eigen::Index i = 0; i < n; ++i) v(i) = f32();
    return v;
  }

  CheckpointMeta header(std::optional<CheckpointKind> expected, std::vector<std::uint64_t>& dims) {
    const char* magic = take(kMagic.size());
    if (std::memcmp(magic, kMagic.data(), kMagic.size()) != 0) {
      throw FormatError(path_ + ": bad magic (not a checkpoint)");
    }
    CheckpointMeta meta;
    const std::uint8_t kind = u8();
    if (kind > 2) throw FormatError(path_ + ": unknown checkpoint kind " + std::to_string(kind));
    meta.kind = static_cast<CheckpointKind>(kind);
    meta.flags = u32();
    meta.seed = u64();
    meta.config_hash = u64();
    const std::uint32_t ndims = u32();
    if (ndims > 8) throw FormatError(path_ + ": implausible dimension count " + std::to_string(ndims));
    dims.resize(ndims);
    for (auto& d : dims) {
      d = u64();
      if (d > kMaxElements) throw FormatError(path_ + ": dimension overflow");
    }
    if (expected && meta.kind != *expected) {
      throw FormatError(path_ + ": checkpoint kind " + std::to_string(kind) + ", expected " +
                        std::to_string(static_cast<int>(*expected)));
    }
    return meta;
  }

  void expect_payload(std::uint64_t floats) {
    if (floats > kMaxElements) throw FormatError(path_ + ": dimension overflow");
    const std::uint64_t want = floats * 4;
    const std::uint64_t have = buf_.size() - pos_;
    if (have < want) throw FormatError(path_ + ": truncated payload");
    if (have > want) throw FormatError(path_ + ": trailing bytes after payload");
  }

  void finish() const {
    if (pos_ != buf_.size()) throw FormatError(path_ + ": trailing bytes after payload");
  }

 private:
  const char* take(std::size_t n) {
    if (buf_.size() - pos_ < n) throw FormatError(path_ + ": truncated file");
    const char* p = buf_.data() + pos_;
    pos_ += n;
    return p;
  }
  template <typename T>
  T get_le() {
    const char* p = take(sizeof(T));
    T v = 0;
    for (std::size_t i = 0; i < sizeof(T); ++i) {
      v |= static_cast<T>(static_cast<unsigned char>(p[i])) << (8 * i);
    }
    return v;
  }

  std::string path_;
  std::vector<char> buf_;
  std::size_t pos_ = 0;
};

std::uint64_t checked_product(std::uint64_t a, std::uint64_t b) {
  if (a != 0 && b > std::numeric_limits<std::uint64_t>::max() / a) {
    throw FormatError("checkpoint: dimension overflow");
  }
  return a * b;
}

void need_dims(const std::vector<std::uint64_t>& dims, std::size_t n, const char* what) {
  if (dims.size() != n) {
    throw FormatError(std::string("checkpoint: ") + what + " expects " + std::to_string(n) +
                      " dimensions, found " + std::to_string(dims.size()));
  }
}

}  // namespace

void save_dataset(const std::filesystem::path& path, const FeatureDataset& data, std::uint64_t seed,
                  std::uint64_t config_hash) {
  if (data.importance.size() != data.z.cols()) {
    throw DimensionError("save_dataset: importance length does not match F");
  }
  Writer w(path);
  w.header({CheckpointKind::kDataset, 0, seed, config_hash},
           {static_cast<std::uint64_t>(data.z.rows()), static_cast<std::uint64_t>(data.z.cols())});
  w.block(data.z);
  w.block(data.importance.transpose());
  w.f32(data.p);
  w.commit();
}

FeatureDataset load_dataset(const std::filesystem::path& path, CheckpointMeta* meta) {
  Reader r(path);
  std::vector<std::uint64_t> dims;
  const CheckpointMeta m = r.header(CheckpointKind::kDataset, dims);
  need_dims(dims, 2, "dataset");
  r.expect_payload(checked_product(dims[0], dims[1]) + dims[1] + 1);
  FeatureDataset data;
  data.z.resize(static_cast<Eigen::Index>(dims[0]), static_cast<Eigen::Index>(dims[1]));
  for (Eigen::Index i = 0; i < data.z.rows(); ++i) {
    for (Eigen::Index j = 0; j < data.z.cols(); ++j) data.z(i, j) = r.f32();
  }
  data.importance = r.vector(static_cast<Eigen::Index>(dims[1]));
  data.p = r.f32();
  r.finish();
  if (meta != nullptr) *meta = m;
  return data;
}

void save_toy(const std::filesystem::path& path, const ToyModel& model, std::uint64_t config_hash) {
  Writer w(path);
  const std::uint32_t flags = model.output == OutputActivation::kRelu ? kFlagOutputRelu : 0U;
  w.header({CheckpointKind::kToyModel, flags, model.seed, config_hash},
           {static_cast<std::uint64_t>(model.w.rows()), static_cast<std::uint64_t>(model.w.cols())});
  w.block(model.w);
  w.block(model.b_dec.transpose());
  w.commit();
}

ToyModel load_toy(const std::filesystem::path& path, CheckpointMeta* meta) {
  Reader r(path);
  std::vector<std::uint64_t> dims;
  const CheckpointMeta m = r.header(CheckpointKind::kToyModel, dims);
  need_dims(dims, 2, "toy model");
  r.expect_payload(checked_product(dims[0], dims[1]) + dims[0]);
  ToyModel model;
  model.w = r.matrix(static_cast<Eigen::Index>(dims[0]), static_cast<Eigen::Index>(dims[1]));
  model.b_dec = r.vector(static_cast<Eigen::Index>(dims[0]));
  model.seed = m.seed;
  model.output = (m.flags & kFlagOutputRelu) != 0 ? OutputActivation::kRelu : OutputActivation::kNone;
  r.finish();
  if (meta != nullptr) *meta = m;
  return model;
}

void save_sae(const std::filesystem::path& path, const SaeModel& sae, std::uint64_t seed,
              std::uint64_t config_hash) {
  Writer w(path);
  w.header({CheckpointKind::kSae, 0, seed, config_hash},
           {static_cast<std::uint64_t>(sae.w_enc.rows()), static_cast<std::uint64_t>(sae.w_enc.cols()),
            static_cast<std::uint64_t>(sae.k)});
  w.block(sae.w_enc);
  w.block(sae.b_enc.transpose());
  w.block(sae.w_dec);
  w.block(sae.b_dec.transpose());
  w.commit();
}

SaeModel load_sae(const std::filesystem::path& path, CheckpointMeta* meta) {
  Reader r(path);
  std::vector<std::uint64_t> dims;
  const CheckpointMeta m = r.header(CheckpointKind::kSae, dims);
  need_dims(dims, 3, "sae");
  const std::uint64_t f_lat = dims[0];
  const std::uint64_t n = dims[1];
  if (dims[2] < 1 || dims[2] > f_lat) throw FormatError("checkpoint: sae k out of range");
  r.expect_payload(2 * checked_product(f_lat, n) + f_lat + n);
  SaeModel sae;
  sae.k = static_cast<int>(dims[2]);
  sae.w_enc = r.matrix(static_cast<Eigen::Index>(f_lat), static_cast<Eigen::Index>(n));
  sae.b_enc = r.vector(static_cast<Eigen::Index>(f_lat));
  sae.w_dec = r.matrix(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(f_lat));
  sae.b_dec = r.vector(static_cast<Eigen::Index>(n));
  r.finish();
  if (meta != nullptr) *meta = m;
  return sae;
}

CheckpointMeta peek_checkpoint(const std::filesystem::path& path) {
  Reader r(path);
  std::vector<std::uint64_t> dims;
  return r.header(std::nullopt, dims);
}

}  // namespace supalign
