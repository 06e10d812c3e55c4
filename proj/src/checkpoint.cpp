#include "flowinfer/checkpoint.hpp"

#include <cstring>
#include <fstream>
#include <sstream>

#include "flowinfer/config.hpp"
#include "flowinfer/errors.hpp"

namespace flowinfer {

namespace {

constexpr char kMagic[4] = {'B', 'F', 'L', 'W'};

void put_u32(std::string& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<char>(v >> (8 * i)));
}

void put_u64(std::string& out, std::uint64_t v) {
  for (int i = 0; i < 8; ++i) out.push_back(static_cast<char>(v >> (8 * i)));
}

std::uint32_t get_u32(const unsigned char* p) {
  std::uint32_t v = 0;
  for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(p[i]) << (8 * i);
  return v;
}

std::uint64_t get_u64(const unsigned char* p) {
  std::uint64_t v = 0;
  for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(p[i]) << (8 * i);
  return v;
}

std::string shape_token(const Shape& s) {
  std::string out;
  for (std::size_t i = 0; i < s.size(); ++i) {
    if (i) out += "x";
    out += std::to_string(s[i]);
  }
  return out.empty() ? "1" : out;
}

Shape parse_shape_token(const std::string& token) {
  Shape s;
  std::stringstream ss(token);
  std::string part;
  while (std::getline(ss, part, 'x')) {
    s.push_back(static_cast<std::size_t>(std::stoull(part)));
  }
  return s;
}

}  // namespace

const Tensor& Checkpoint::tensor(const std::string& name) const {
  for (std::size_t i = 0; i < tensor_names.size(); ++i) {
    if (tensor_names[i] == name) return tensors[i];
  }
  throw IoError("checkpoint holds no tensor named '" + name + "'");
}

void save_checkpoint(const std::string& path, const Checkpoint& ckpt) {
  std::ostringstream header;
  header << "config_hash = " << hex64(ckpt.config_hash) << "\n";
  header << "[config]\n" << ckpt.config_text;
  header << "[permutations]\n";
  for (std::size_t i = 0; i < ckpt.permutations.size(); ++i) {
    header << "block" << i << " = ";
    for (std::size_t j = 0; j < ckpt.permutations[i].size(); ++j) {
      if (j) header << ",";
      header << ckpt.permutations[i][j];
    }
    header << "\n";
  }
  header << "[tensors]\n";
  std::uint64_t offset = 0;
  for (std::size_t i = 0; i < ckpt.tensors.size(); ++i) {
    header << ckpt.tensor_names[i] << " = f64 "
           << shape_token(ckpt.tensors[i].shape()) << " @ " << offset << "\n";
    offset += ckpt.tensors[i].size() * sizeof(double);
  }
  std::string header_text = header.str();

  std::string blob;
  blob.reserve(16 + header_text.size() + offset);
  blob.append(kMagic, 4);
  put_u32(blob, Checkpoint::kVersion);
  put_u64(blob, header_text.size());
  blob += header_text;
  for (const Tensor& t : ckpt.tensors) {
    // Doubles are stored little-endian; this writer assumes a LE host.
    blob.append(reinterpret_cast<const char*>(t.data()),
                t.size() * sizeof(double));
  }

  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write checkpoint '" + path + "'");
  out.write(blob.data(), static_cast<std::streamsize>(blob.size()));
  if (!out) throw IoError("failed while writing checkpoint '" + path + "'");
}

Checkpoint load_checkpoint(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open checkpoint '" + path + "'");
  std::string blob((std::istreambuf_iterator<char>(in)),
                   std::istreambuf_iterator<char>());
  if (blob.size() < 16 || std::memcmp(blob.data(), kMagic, 4) != 0) {
    throw IoError("'" + path + "' is not a checkpoint (bad magic)");
  }
  const unsigned char* bytes =
      reinterpret_cast<const unsigned char*>(blob.data());
  std::uint32_t version = get_u32(bytes + 4);
  if (version != Checkpoint::kVersion) {
    throw IoError("checkpoint version " + std::to_string(version) +
                  " unsupported (expected " +
                  std::to_string(Checkpoint::kVersion) + ")");
  }
  std::uint64_t header_len = get_u64(bytes + 8);
  if (16 + header_len > blob.size()) {
    throw IoError("checkpoint header truncated");
  }
  std::string header = blob.substr(16, header_len);
  std::size_t payload_base = 16 + header_len;

  Checkpoint ckpt;
  enum class Section { kTop, kConfig, kPermutations, kTensors };
  Section section = Section::kTop;
  std::istringstream lines(header);
  std::string line;
  struct Entry {
    std::string name;
    Shape shape;
    std::uint64_t offset;
  };
  std::vector<Entry> entries;
  while (std::getline(lines, line)) {
    if (line == "[config]") { section = Section::kConfig; continue; }
    if (line == "[permutations]") { section = Section::kPermutations; continue; }
    if (line == "[tensors]") { section = Section::kTensors; continue; }
    switch (section) {
      case Section::kTop: {
        std::size_t eq = line.find(" = ");
        if (eq != std::string::npos && line.substr(0, eq) == "config_hash") {
          ckpt.config_hash = std::stoull(line.substr(eq + 3), nullptr, 16);
        }
        break;
      }
      case Section::kConfig:
        ckpt.config_text += line + "\n";
        break;
      case Section::kPermutations: {
        std::size_t eq = line.find(" = ");
        if (eq == std::string::npos) {
          throw IoError("malformed permutation line in checkpoint header");
        }
        std::vector<std::size_t> perm;
        std::stringstream ss(line.substr(eq + 3));
        std::string item;
        while (std::getline(ss, item, ',')) {
          perm.push_back(static_cast<std::size_t>(std::stoull(item)));
        }
        ckpt.permutations.push_back(std::move(perm));
        break;
      }
      case Section::kTensors: {
        std::size_t eq = line.find(" = ");
        if (eq == std::string::npos) {
          throw IoError("malformed tensor line in checkpoint header");
        }
        Entry e;
        e.name = line.substr(0, eq);
        std::stringstream ss(line.substr(eq + 3));
        std::string dtype, shape_tok, at;
        ss >> dtype >> shape_tok >> at >> e.offset;
        if (dtype != "f64" || at != "@") {
          throw IoError("malformed tensor descriptor for '" + e.name + "'");
        }
        e.shape = parse_shape_token(shape_tok);
        entries.push_back(std::move(e));
        break;
      }
    }
  }

  for (const Entry& e : entries) {
    std::size_t count = shape_size(e.shape);
    std::size_t begin = payload_base + e.offset;
    if (begin + count * sizeof(double) > blob.size()) {
      throw IoError("checkpoint payload truncated at tensor '" + e.name + "'");
    }
    std::vector<double> data(count);
    std::memcpy(data.data(), blob.data() + begin, count * sizeof(double));
    ckpt.tensor_names.push_back(e.name);
    ckpt.tensors.emplace_back(e.shape, std::move(data));
  }
  return ckpt;
}

std::uint64_t file_hash(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open '" + path + "'");
  std::string blob((std::istreambuf_iterator<char>(in)),
                   std::istreambuf_iterator<char>());
  return fnv1a64(blob);
}

}  // namespace flowinfer
