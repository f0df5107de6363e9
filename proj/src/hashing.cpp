#include "cityvl/hashing.hpp"

#include <fstream>
#include <stdexcept>

#include <openssl/evp.h>

namespace cityvl {

namespace {

std::string to_hex(const unsigned char* digest, std::size_t len) {
  static const char* hexd = "0123456789abcdef";
  std::string out(len * 2, '0');
  for (std::size_t i = 0; i < len; ++i) {
    out[2 * i] = hexd[digest[i] >> 4];
    out[2 * i + 1] = hexd[digest[i] & 0xf];
  }
  return out;
}

}  // namespace

std::string sha256_hex(std::string_view bytes) {
  unsigned char digest[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  if (!EVP_Digest(bytes.data(), bytes.size(), digest, &len, EVP_sha256(),
                  nullptr))
    throw std::runtime_error("sha256 failed");
  return to_hex(digest, len);
}

std::string sha256_hex(const std::vector<std::uint8_t>& bytes) {
  return sha256_hex(std::string_view(
      reinterpret_cast<const char*>(bytes.data()), bytes.size()));
}

std::string sha256_file_hex(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot read " + path);
  std::string content((std::istreambuf_iterator<char>(in)),
                      std::istreambuf_iterator<char>());
  return sha256_hex(content);
}

}  // namespace cityvl
