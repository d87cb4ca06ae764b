#include "dircalc/spectral_cache.hpp"

#include <array>
#include <cstdlib>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "dircalc/errors.hpp"

namespace dircalc {

namespace {

constexpr std::array<char, 8> kMagic{'D', 'C', 'S', 'P', 'E', 'C', '1', '\0'};

template <typename T>
void write_pod(std::ostream& out, const T& v) {
  out.write(reinterpret_cast<const char*>(&v), sizeof(T));
}

template <typename T>
bool read_pod(std::istream& in, T& v) {
  return static_cast<bool>(in.read(reinterpret_cast<char*>(&v), sizeof(T)));
}

}  // namespace

std::string cache_path(const std::string& dir, const DirichletSpace& space) {
  std::ostringstream name;
  name << std::hex << space.hash() << ".spec";
  return (std::filesystem::path(dir) / name.str()).string();
}

void save_spectrum(const SpectralData& spec, const DirichletSpace& space, const std::string& path) {
  const auto parent = std::filesystem::path(path).parent_path();
  if (!parent.empty()) std::filesystem::create_directories(parent);
  const std::string tmp = path + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary);
    if (!out) throw ValidationError("spectral cache: cannot write " + tmp);
    out.write(kMagic.data(), kMagic.size());
    write_pod<std::uint64_t>(out, spec.size());
    write_pod<std::uint64_t>(out, space.hash());
    out.write(reinterpret_cast<const char*>(spec.eigenvalues.data()),
              static_cast<std::streamsize>(sizeof(double) * spec.size()));
    out.write(reinterpret_cast<const char*>(spec.eigenfields.data()),
              static_cast<std::streamsize>(sizeof(double) * spec.size() * spec.size()));
  }
  std::filesystem::rename(tmp, path);
}

std::optional<SpectralData> load_spectrum(const DirichletSpace& space, const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) return std::nullopt;
  std::array<char, 8> magic{};
  std::uint64_t n = 0, hash = 0;
  if (!in.read(magic.data(), magic.size()) || magic != kMagic) return std::nullopt;
  if (!read_pod(in, n) || !read_pod(in, hash)) return std::nullopt;
  if (n != space.size() || hash != space.hash()) return std::nullopt;
  SpectralData spec;
  const auto ni = static_cast<Eigen::Index>(n);
  spec.eigenvalues.resize(ni);
  spec.eigenfields.resize(ni, ni);
  spec.measure = space.measure();
  if (!in.read(reinterpret_cast<char*>(spec.eigenvalues.data()), static_cast<std::streamsize>(sizeof(double) * n))) {
    return std::nullopt;
  }
  if (!in.read(reinterpret_cast<char*>(spec.eigenfields.data()),
               static_cast<std::streamsize>(sizeof(double) * n * n))) {
    return std::nullopt;
  }
  return spec;
}

SpectralData decompose_cached(const DirichletSpace& space, const std::string& dir) {
  std::string root = dir;
  if (root.empty()) {
    if (const char* env = std::getenv("DIRCALC_CACHE")) root = env;
  }
  if (root.empty()) return decompose(space);
  const std::string path = cache_path(root, space);
  if (auto cached = load_spectrum(space, path)) return *std::move(cached);
  SpectralData spec = decompose(space);
  save_spectrum(spec, space, path);
  return spec;
}

}  // namespace dircalc
