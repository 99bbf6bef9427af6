#include "dvgait/numgrad/checkpoint.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <iterator>
#include <map>

namespace dvgait::numgrad {

namespace {

static_assert(std::endian::native == std::endian::little, "checkpoint I/O assumes a little-endian host");

void put_u32(std::string& out, std::uint32_t v) { out.append(reinterpret_cast<const char*>(&v), 4); }

class Reader {
 public:
  Reader(std::string bytes, std::string path) : bytes_(std::move(bytes)), path_(std::move(path)) {}

  const char* take(std::size_t n) {
    if (n > bytes_.size() - pos_) {
      throw CheckpointError(path_ + ": truncated at byte " + std::to_string(pos_) + " (need " +
                            std::to_string(n) + " more)");
    }
    const char* p = bytes_.data() + pos_;
    pos_ += n;
    return p;
  }
  std::uint32_t u32() {
    std::uint32_t v;
    std::memcpy(&v, take(4), 4);
    return v;
  }
  bool done() const { return pos_ == bytes_.size(); }

 private:
  std::string bytes_;
  std::string path_;
  std::size_t pos_ = 0;
};

}  // namespace

void save_tensors(const std::filesystem::path& path, const std::vector<NamedTensor>& tensors) {
  std::string out = "DVGW";
  put_u32(out, kCheckpointVersion);
  for (const auto& [name, t] : tensors) {
    put_u32(out, static_cast<std::uint32_t>(name.size()));
    out += name;
    put_u32(out, static_cast<std::uint32_t>(t.rank()));
    for (auto extent : t.shape()) put_u32(out, static_cast<std::uint32_t>(extent));
    const Tensor f = t.dtype() == DType::f32 ? t : t.to(DType::f32);
    auto values = f.data<float>();
    out.append(reinterpret_cast<const char*>(values.data()), values.size() * sizeof(float));
  }
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream file(path, std::ios::binary | std::ios::trunc);
  if (!file) throw CheckpointError(path.string() + ": cannot open for writing");
  file.write(out.data(), static_cast<std::streamsize>(out.size()));
  if (!file) throw CheckpointError(path.string() + ": write failed");
}

std::vector<NamedTensor> load_tensors(const std::filesystem::path& path) {
  std::ifstream file(path, std::ios::binary);
  if (!file) throw CheckpointError(path.string() + ": cannot open");
  Reader in(std::string(std::istreambuf_iterator<char>(file), {}), path.string());
  if (std::string(in.take(4), 4) != "DVGW") throw CheckpointError(path.string() + ": bad magic");
  const auto version = in.u32();
  if (version != kCheckpointVersion) {
    throw CheckpointError(path.string() + ": unsupported version " + std::to_string(version));
  }
  std::vector<NamedTensor> tensors;
  while (!in.done()) {
    const auto name_len = in.u32();
    std::string name(in.take(name_len), name_len);
    const auto rank = in.u32();
    Shape shape;
    for (std::uint32_t i = 0; i < rank; ++i) shape.push_back(in.u32());
    const auto n = static_cast<std::size_t>(shape_numel(shape));
    std::vector<float> values(n);
    std::memcpy(values.data(), in.take(n * sizeof(float)), n * sizeof(float));
    tensors.emplace_back(std::move(name), Tensor::from_vector(std::move(shape), std::move(values)));
  }
  return tensors;
}

void save_checkpoint(const std::filesystem::path& path, const Module& module) {
  save_tensors(path, module.state());
}

void load_checkpoint(const std::filesystem::path& path, Module& module) {
  std::map<std::string, Tensor> stored;
  for (auto& [name, t] : load_tensors(path)) stored.emplace(name, t);
  auto targets = module.state();
  if (stored.size() != targets.size()) {
    throw CheckpointError(path.string() + ": holds " + std::to_string(stored.size()) + " tensors, module has " +
                          std::to_string(targets.size()));
  }
  for (auto& [name, t] : targets) {
    auto it = stored.find(name);
    if (it == stored.end()) throw CheckpointError(path.string() + ": missing tensor " + name);
    if (it->second.shape() != t.shape()) {
      throw CheckpointError(path.string() + ": " + name + " has shape " + shape_string(it->second.shape()) +
                            ", expected " + shape_string(t.shape()));
    }
    t.assign_(it->second);
  }
}

}  // namespace dvgait::numgrad
