#include "manifest.hpp"

#include <array>
#include <fstream>
#include <memory>

#include <CLI11.hpp>
#include <openssl/evp.h>
#include <openssl/opensslv.h>

#include "raregraph/errors.hpp"

namespace raregraph::cli {

namespace {

using DigestCtx = std::unique_ptr<EVP_MD_CTX, decltype(&EVP_MD_CTX_free)>;

DigestCtx new_ctx() {
  DigestCtx ctx(EVP_MD_CTX_new(), &EVP_MD_CTX_free);
  if (!ctx || EVP_DigestInit_ex(ctx.get(), EVP_sha256(), nullptr) != 1) throw Error("sha256: digest init failed");
  return ctx;
}

std::string finish(EVP_MD_CTX* ctx) {
  std::array<unsigned char, EVP_MAX_MD_SIZE> md{};
  unsigned int len = 0;
  if (EVP_DigestFinal_ex(ctx, md.data(), &len) != 1) throw Error("sha256: digest final failed");
  static constexpr char kHex[] = "0123456789abcdef";
  std::string out;
  out.reserve(2 * len);
  for (unsigned int i = 0; i < len; ++i) {
    out += kHex[md[i] >> 4];
    out += kHex[md[i] & 0xF];
  }
  return out;
}

nlohmann::json entries(const std::vector<FileEntry>& files) {
  auto out = nlohmann::json::array();
  for (const auto& f : files) out.push_back({{"name", f.name}, {"sha256", sha256_file(f.path)}});
  return out;
}

}  // namespace

std::string sha256_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot read " + path.string() + " for hashing");
  auto ctx = new_ctx();
  std::array<char, 1 << 16> buf{};
  while (in) {
    in.read(buf.data(), buf.size());
    if (in.gcount() > 0) EVP_DigestUpdate(ctx.get(), buf.data(), static_cast<std::size_t>(in.gcount()));
  }
  return finish(ctx.get());
}

std::string sha256_text(const std::string& text) {
  auto ctx = new_ctx();
  EVP_DigestUpdate(ctx.get(), text.data(), text.size());
  return finish(ctx.get());
}

void write_manifest(const std::filesystem::path& dir, const Manifest& manifest) {
  nlohmann::json j;
  j["tool"] = "raregraph";
  j["command"] = manifest.command;
  j["settings"] = manifest.settings;
  j["config_hash"] = sha256_text(manifest.settings.dump());
  j["inputs"] = entries(manifest.inputs);
  j["outputs"] = entries(manifest.outputs);
  j["versions"] = {{"raregraph", RAREGRAPH_VERSION},
                   {"cli11", CLI11_VERSION},
                   {"nlohmann_json", std::to_string(NLOHMANN_JSON_VERSION_MAJOR) + "." +
                                         std::to_string(NLOHMANN_JSON_VERSION_MINOR) + "." +
                                         std::to_string(NLOHMANN_JSON_VERSION_PATCH)},
                   {"openssl", OPENSSL_VERSION_TEXT}};
  std::ofstream out(dir / "manifest.json", std::ios::binary | std::ios::trunc);
  if (!out) throw Error("cannot write " + (dir / "manifest.json").string());
  out << j.dump(2) << '\n';
}

}  // namespace raregraph::cli
