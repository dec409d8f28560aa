#include "manifest.hpp"

#include <algorithm>
#include <fstream>
#include <iomanip>
#include <iterator>
#include <sstream>
#include <stdexcept>

#include <openssl/evp.h>

namespace evoglm::cli {
namespace {

std::string hex(const unsigned char* data, unsigned int size) {
  std::ostringstream out;
  out << std::hex << std::setfill('0');
  for (unsigned int k = 0; k < size; ++k) out << std::setw(2) << static_cast<int>(data[k]);
  return out.str();
}

std::string read_bytes(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open " + path.string());
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

}  // namespace

std::string sha256_hex(const std::string& bytes) {
  unsigned char digest[EVP_MAX_MD_SIZE];
  unsigned int size = 0;
  if (EVP_Digest(bytes.data(), bytes.size(), digest, &size, EVP_sha256(), nullptr) != 1) {
    throw std::runtime_error("SHA-256 failed");
  }
  return hex(digest, size);
}

std::string sha256_file(const std::filesystem::path& path) { return sha256_hex(read_bytes(path)); }

RunRecord::RunRecord(std::string command, std::vector<std::string> argv)
    : command_(std::move(command)), argv_(std::move(argv)), start_(std::chrono::steady_clock::now()) {}

void RunRecord::input(const std::filesystem::path& path) {
  inputs_.emplace_back(path.string(), sha256_file(path));
}

void RunRecord::seed(const std::string& name, std::uint64_t value) { seeds_[name] = value; }

std::vector<std::pair<std::string, std::string>> output_digests(const std::filesystem::path& dir) {
  std::vector<std::pair<std::string, std::string>> out;
  for (const auto& entry : std::filesystem::recursive_directory_iterator(dir)) {
    if (!entry.is_regular_file() || entry.path().filename() == "manifest.json") continue;
    out.emplace_back(std::filesystem::relative(entry.path(), dir).generic_string(), sha256_file(entry.path()));
  }
  std::sort(out.begin(), out.end());
  return out;
}

void RunRecord::finish(const std::filesystem::path& out) const {
  const double seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count();
  Json inputs = Json::array();
  for (const auto& [path, digest] : inputs_) inputs.push_back({{"path", path}, {"sha256", digest}});
  Json outputs = Json::array();
  for (const auto& [path, digest] : output_digests(out)) outputs.push_back({{"path", path}, {"sha256", digest}});
  const Json manifest{{"tool", "evoglm"},
                      {"version", EVOGLM_VERSION},
                      {"command", command_},
                      {"argv", argv_},
                      {"cwd", std::filesystem::current_path().string()},
                      {"config", config_},
                      {"config_sha256", sha256_hex(config_.dump())},
                      {"seeds", seeds_},
                      {"inputs", inputs},
                      {"outputs", outputs},
                      {"elapsed_seconds", seconds}};
  write_json_file(out / "manifest.json", manifest);
}

}  // namespace evoglm::cli
