#include "salclass/checkpoint.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <iterator>

namespace salclass {

namespace {

class Writer {
 public:
  template <typename T>
  void put(T value) {
    static_assert(std::is_trivially_copyable_v<T>);
    std::uint64_t bits = 0;
    if constexpr (std::is_floating_point_v<T>) {
      bits = std::bit_cast<std::uint64_t>(static_cast<double>(value));
    } else {
      bits = static_cast<std::uint64_t>(value);
    }
    for (std::size_t i = 0; i < sizeof(T); ++i) bytes.push_back(static_cast<unsigned char>(bits >> (8 * i)));
  }
  void put_string(const std::string& s) {
    put<std::uint32_t>(static_cast<std::uint32_t>(s.size()));
    bytes.insert(bytes.end(), s.begin(), s.end());
  }
  std::vector<unsigned char> bytes;
};

class Reader {
 public:
  explicit Reader(const std::vector<unsigned char>& b) : bytes_(b) {}

  template <typename T>
  T get() {
    need(sizeof(T));
    std::uint64_t bits = 0;
    for (std::size_t i = 0; i < sizeof(T); ++i) bits |= static_cast<std::uint64_t>(bytes_[pos_ + i]) << (8 * i);
    pos_ += sizeof(T);
    if constexpr (std::is_floating_point_v<T>) {
      return std::bit_cast<double>(bits);
    } else {
      return static_cast<T>(bits);
    }
  }
  std::string get_string() {
    const auto n = get<std::uint32_t>();
    need(n);
    std::string s(reinterpret_cast<const char*>(bytes_.data() + pos_), n);
    pos_ += n;
    return s;
  }
  void need(std::size_t n) const {
    if (pos_ + n > bytes_.size()) throw CheckpointError("checkpoint truncated at byte " + std::to_string(pos_));
  }
  bool done() const { return pos_ == bytes_.size(); }
  std::size_t remaining() const { return bytes_.size() - pos_; }

 private:
  const std::vector<unsigned char>& bytes_;
  std::size_t pos_ = 0;
};

void put_record(Writer& w, const std::string& name, const Shape& shape, const Eigen::VectorXd& values) {
  w.put_string(name);
  w.put<std::uint32_t>(static_cast<std::uint32_t>(shape.size()));
  for (Index e : shape) w.put<std::uint64_t>(static_cast<std::uint64_t>(e));
  for (Index i = 0; i < values.size(); ++i) w.put<double>(values[i]);
}

const std::string kMomentumPrefix = "momentum/";
const std::string kBestPrefix = "best/";

}  // namespace

std::vector<unsigned char> encode_checkpoint(const Checkpoint& ckpt) {
  Writer w;
  w.bytes.insert(w.bytes.end(), std::begin(kCheckpointMagic), std::end(kCheckpointMagic));
  w.put<std::uint32_t>(kCheckpointVersion);
  const auto& s = ckpt.state;
  const std::size_t count = ckpt.model.size() + s.momentum.size() + s.best_snapshot.size();
  w.put<std::uint32_t>(static_cast<std::uint32_t>(count));
  for (const auto& r : ckpt.model) put_record(w, r.name, r.shape, r.values);
  for (const auto& [name, buffer] : s.momentum) put_record(w, kMomentumPrefix + name, {buffer.size()}, buffer);
  for (const auto& r : s.best_snapshot) put_record(w, kBestPrefix + r.name, r.shape, r.values);

  w.put<std::int32_t>(s.epoch);
  w.put<std::int64_t>(s.iteration);
  w.put<double>(s.best_val_mca);
  w.put<std::int32_t>(s.best_mca_epoch);
  w.put<std::int32_t>(s.epochs_since_mca_improvement);
  w.put<double>(s.best_val_mse);
  w.put<std::int32_t>(s.best_mse_epoch);
  w.put<std::int32_t>(s.epochs_since_mse_improvement);
  w.put<std::int32_t>(s.selected_epoch);
  w.put<std::uint32_t>(static_cast<std::uint32_t>(s.history.size()));
  for (const auto& h : s.history) {
    w.put<std::int32_t>(h.epoch);
    w.put<std::int64_t>(h.iteration);
    for (double v : {h.lr, h.loss_total, h.loss_class, h.loss_sal, h.val_mca, h.val_mse}) w.put<double>(v);
  }
  return std::move(w.bytes);
}

Checkpoint decode_checkpoint(const std::vector<unsigned char>& bytes) {
  if (bytes.size() < 8 || std::memcmp(bytes.data(), kCheckpointMagic, 4) != 0) {
    throw CheckpointError("not a salclass checkpoint (bad magic)");
  }
  std::vector<unsigned char> body(bytes.begin() + 4, bytes.end());
  Reader r(body);
  const auto version = r.get<std::uint32_t>();
  if (version != kCheckpointVersion) {
    throw CheckpointError("unsupported checkpoint version " + std::to_string(version));
  }
  Checkpoint ckpt;
  auto& s = ckpt.state;
  const auto count = r.get<std::uint32_t>();
  for (std::uint32_t k = 0; k < count; ++k) {
    TensorRecord rec;
    rec.name = r.get_string();
    const auto rank = r.get<std::uint32_t>();
    Index numel = 1;
    for (std::uint32_t d = 0; d < rank; ++d) {
      const auto e = static_cast<Index>(r.get<std::uint64_t>());
      if (e <= 0) throw CheckpointError("record " + rec.name + " has a non-positive extent");
      rec.shape.push_back(e);
      numel *= e;
    }
    r.need(static_cast<std::size_t>(numel) * 8);
    rec.values.resize(numel);
    for (Index i = 0; i < numel; ++i) rec.values[i] = r.get<double>();
    if (rec.name.rfind(kMomentumPrefix, 0) == 0) {
      s.momentum.emplace(rec.name.substr(kMomentumPrefix.size()), std::move(rec.values));
    } else if (rec.name.rfind(kBestPrefix, 0) == 0) {
      rec.name = rec.name.substr(kBestPrefix.size());
      s.best_snapshot.push_back(std::move(rec));
    } else {
      ckpt.model.push_back(std::move(rec));
    }
  }
  s.epoch = r.get<std::int32_t>();
  s.iteration = r.get<std::int64_t>();
  s.best_val_mca = r.get<double>();
  s.best_mca_epoch = r.get<std::int32_t>();
  s.epochs_since_mca_improvement = r.get<std::int32_t>();
  s.best_val_mse = r.get<double>();
  s.best_mse_epoch = r.get<std::int32_t>();
  s.epochs_since_mse_improvement = r.get<std::int32_t>();
  s.selected_epoch = r.get<std::int32_t>();
  const auto rows = r.get<std::uint32_t>();
  for (std::uint32_t k = 0; k < rows; ++k) {
    EpochRecord h;
    h.epoch = r.get<std::int32_t>();
    h.iteration = r.get<std::int64_t>();
    h.lr = r.get<double>();
    h.loss_total = r.get<double>();
    h.loss_class = r.get<double>();
    h.loss_sal = r.get<double>();
    h.val_mca = r.get<double>();
    h.val_mse = r.get<double>();
    s.history.push_back(h);
  }
  if (!r.done()) throw CheckpointError(std::to_string(r.remaining()) + " trailing bytes after checkpoint");
  return ckpt;
}

void write_checkpoint(const std::filesystem::path& path, const Checkpoint& checkpoint) {
  const auto bytes = encode_checkpoint(checkpoint);
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw CheckpointError("cannot open " + path.string() + " for writing");
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw CheckpointError("write failed for " + path.string());
}

Checkpoint read_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw CheckpointError("cannot open checkpoint " + path.string());
  std::vector<unsigned char> bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  return decode_checkpoint(bytes);
}

Checkpoint best_checkpoint(const TrainState& state) {
  Checkpoint c;
  c.model = state.best_snapshot;
  c.state = state;
  c.state.best_snapshot.clear();
  c.state.momentum.clear();
  return c;
}

const TensorRecord& find_record(const Checkpoint& checkpoint, const std::string& name) {
  for (const auto& r : checkpoint.model) {
    if (r.name == name) return r;
  }
  throw CheckpointError("checkpoint has no tensor '" + name + "'");
}

}  // namespace salclass
