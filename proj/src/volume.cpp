#include "milq/volume.hpp"

#include <algorithm>
#include <charconv>
#include <fstream>
#include <map>
#include <sstream>

#include "milq/rng.hpp"

namespace milq {

std::size_t count_set(const Mask& mask) {
  return static_cast<std::size_t>(std::count_if(mask.values().begin(), mask.values().end(),
                                                [](std::uint8_t b) { return b != 0; }));
}

Volume::Volume(Image image, std::optional<Mask> mask) : image_(std::move(image)), mask_(std::move(mask)) {
  if (mask_ && mask_->dims() != image_.dims()) throw InvalidArgument("mask dims differ from image dims");
}

Patch extract_patch(const Volume& v, Index3 origin, int size, std::string source_id) {
  if (size < 1) throw InvalidArgument("patch size must be >= 1");
  const auto& img = v.image();
  for (int a = 0; a < 3; ++a) {
    if (origin[a] < 0 || origin[a] + size > img.dims()[a]) throw InvalidArgument("patch exceeds volume bounds");
  }
  Patch p;
  p.origin = origin;
  p.size = size;
  p.source_id = std::move(source_id);
  p.values.resize(static_cast<std::size_t>(size) * size * size);
  std::size_t k = 0;
  for (int z = 0; z < size; ++z) {
    for (int y = 0; y < size; ++y) {
      const std::size_t row = img.index(origin[0], origin[1] + y, origin[2] + z);
      std::copy_n(img.values().begin() + static_cast<std::ptrdiff_t>(row), size, p.values.begin() + static_cast<std::ptrdiff_t>(k));
      k += static_cast<std::size_t>(size);
    }
  }
  return p;
}

std::vector<Index3> valid_patch_centers(const Volume& v, int size) {
  if (!v.mask()) throw InvalidArgument("patch sampling requires a mask");
  if (size < 1) throw InvalidArgument("patch size must be >= 1");
  const Mask& mask = *v.mask();
  const Dims& d = v.dims();
  const int lo = size / 2;
  const int hi_off = size - 1 - lo;
  std::vector<Index3> centers;
  for (int z = lo; z < d.nz - hi_off; ++z) {
    for (int y = lo; y < d.ny - hi_off; ++y) {
      for (int x = lo; x < d.nx - hi_off; ++x) {
        if (mask.at(x, y, z)) centers.push_back({x, y, z});
      }
    }
  }
  return centers;
}

std::vector<Index3> sample_patch_centers(const Volume& v, int n, int size, std::uint64_t seed) {
  if (n < 0) throw InvalidArgument("patch count must be >= 0");
  const auto centers = valid_patch_centers(v, size);
  if (centers.empty()) throw DataError("no valid center: mask empty or volume smaller than patch");
  Rng rng(seed);
  std::vector<Index3> out;
  out.reserve(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) {
    out.push_back(centers[static_cast<std::size_t>(rng.uniform_int(0, static_cast<std::int64_t>(centers.size()) - 1))]);
  }
  return out;
}

std::vector<Patch> sample_patches(const Volume& v, int n, int size, std::uint64_t seed, const std::string& source_id) {
  std::vector<Patch> patches;
  const int half = size / 2;
  for (const auto& c : sample_patch_centers(v, n, size, seed)) {
    patches.push_back(extract_patch(v, {c[0] - half, c[1] - half, c[2] - half}, size, source_id));
  }
  return patches;
}

// ---------------------------------------------------------------------------
// I/O

namespace {

std::string format_double(double value) {
  char buf[64];
  auto res = std::to_chars(buf, buf + sizeof(buf), value);
  return std::string(buf, res.ptr);
}

struct Header {
  Dims dims;
  Spacing spacing;
  std::string dtype;
  std::string data_file;
  std::optional<std::string> mask_file;
};

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

template <typename T>
std::vector<T> parse_numbers(const std::string& text, const std::string& key, std::size_t expected) {
  std::istringstream in(text);
  std::vector<T> out;
  std::string tok;
  while (in >> tok) {
    T value{};
    auto res = std::from_chars(tok.data(), tok.data() + tok.size(), value);
    if (res.ec != std::errc{} || res.ptr != tok.data() + tok.size()) {
      throw MalformedHeader("cannot parse '" + tok + "' in key '" + key + "'");
    }
    out.push_back(value);
  }
  if (out.size() != expected) throw MalformedHeader("key '" + key + "' expects " + std::to_string(expected) + " values");
  return out;
}

Header read_header(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open header " + path.string());
  std::map<std::string, std::string> kv;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) throw MalformedHeader("line " + std::to_string(lineno) + ": expected 'key = value'");
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    if (key != "dims" && key != "spacing" && key != "dtype" && key != "data_file" && key != "mask_file") {
      throw MalformedHeader("unknown header key '" + key + "'");
    }
    if (!kv.emplace(key, value).second) throw MalformedHeader("duplicate header key '" + key + "'");
  }
  for (const char* required : {"dims", "spacing", "dtype", "data_file"}) {
    if (!kv.count(required)) throw MalformedHeader(std::string("missing header key '") + required + "'");
  }
  Header h;
  const auto d = parse_numbers<int>(kv["dims"], "dims", 3);
  if (d[0] < 1 || d[1] < 1 || d[2] < 1) throw MalformedHeader("dims must be >= 1");
  h.dims = {d[0], d[1], d[2]};
  const auto s = parse_numbers<double>(kv["spacing"], "spacing", 3);
  if (!(s[0] > 0 && s[1] > 0 && s[2] > 0)) throw MalformedHeader("spacing must be > 0");
  h.spacing = {s[0], s[1], s[2]};
  h.dtype = kv["dtype"];
  h.data_file = kv["data_file"];
  if (h.data_file.empty()) throw MalformedHeader("empty data_file");
  if (kv.count("mask_file")) h.mask_file = kv["mask_file"];
  return h;
}

void write_header(const std::filesystem::path& path, const Dims& d, const Spacing& s, const std::string& dtype,
                  const std::string& data_file, const std::optional<std::string>& mask_file) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write header " + path.string());
  out << "dims = " << d.nx << ' ' << d.ny << ' ' << d.nz << '\n';
  out << "spacing = " << format_double(s.sx) << ' ' << format_double(s.sy) << ' ' << format_double(s.sz) << '\n';
  out << "dtype = " << dtype << '\n';
  out << "data_file = " << data_file << '\n';
  if (mask_file) out << "mask_file = " << *mask_file << '\n';
  if (!out) throw DataError("write failed for " + path.string());
}

std::vector<unsigned char> read_payload(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open payload " + path.string());
  return std::vector<unsigned char>(std::istreambuf_iterator<char>(in), {});
}

void write_payload(const std::filesystem::path& path, const std::vector<unsigned char>& bytes) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write payload " + path.string());
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw DataError("write failed for " + path.string());
}

std::filesystem::path sibling(const std::filesystem::path& header, const std::string& name) {
  return header.parent_path() / name;
}

Mask load_mask_from(const Header& h, const std::filesystem::path& header_path) {
  if (h.dtype != "uint8") throw UnsupportedType("mask dtype must be uint8, got '" + h.dtype + "'");
  auto bytes = read_payload(sibling(header_path, h.data_file));
  if (bytes.size() != h.dims.count()) {
    throw PayloadSizeMismatch("mask payload has " + std::to_string(bytes.size()) + " bytes, expected " +
                              std::to_string(h.dims.count()));
  }
  std::vector<std::uint8_t> data(bytes.begin(), bytes.end());
  return Mask(h.dims, h.spacing, std::move(data));
}

}  // namespace

Volume load_volume(const std::filesystem::path& header) {
  const Header h = read_header(header);
  if (h.dtype != "int16") throw UnsupportedType("volume dtype must be int16, got '" + h.dtype + "'");
  const auto bytes = read_payload(sibling(header, h.data_file));
  const std::size_t expected = 2 * h.dims.count();
  if (bytes.size() != expected) {
    throw PayloadSizeMismatch("payload has " + std::to_string(bytes.size()) + " bytes, expected " +
                              std::to_string(expected));
  }
  std::vector<std::int16_t> data(h.dims.count());
  for (std::size_t i = 0; i < data.size(); ++i) {
    const auto lo = static_cast<std::uint16_t>(bytes[2 * i]);
    const auto hi = static_cast<std::uint16_t>(bytes[2 * i + 1]);
    data[i] = static_cast<std::int16_t>(static_cast<std::uint16_t>(lo | (hi << 8)));
  }
  std::optional<Mask> mask;
  if (h.mask_file) {
    const auto mask_path = sibling(header, *h.mask_file);
    mask = load_mask_from(read_header(mask_path), mask_path);
    if (mask->dims() != h.dims) throw DataError("mask dims differ from volume dims");
  }
  return Volume(Image(h.dims, h.spacing, std::move(data)), std::move(mask));
}

void save_volume(const Volume& v, const std::filesystem::path& header) {
  const std::string stem = header.stem().string();
  const std::string data_file = stem + ".raw";
  std::optional<std::string> mask_file;
  if (v.mask()) {
    mask_file = stem + "_mask.hdr";
    save_mask(*v.mask(), sibling(header, *mask_file));
  }
  const auto values = v.image().values();
  std::vector<unsigned char> bytes(values.size() * 2);
  for (std::size_t i = 0; i < values.size(); ++i) {
    const auto u = static_cast<std::uint16_t>(values[i]);
    bytes[2 * i] = static_cast<unsigned char>(u & 0xFFu);
    bytes[2 * i + 1] = static_cast<unsigned char>(u >> 8);
  }
  write_payload(sibling(header, data_file), bytes);
  write_header(header, v.dims(), v.spacing(), "int16", data_file, mask_file);
}

Mask load_mask(const std::filesystem::path& header) { return load_mask_from(read_header(header), header); }

void save_mask(const Mask& m, const std::filesystem::path& header) {
  const std::string data_file = header.stem().string() + ".raw";
  std::vector<unsigned char> bytes(m.size());
  for (std::size_t i = 0; i < m.size(); ++i) bytes[i] = m[i] ? 1 : 0;
  write_payload(sibling(header, data_file), bytes);
  write_header(header, m.dims(), m.spacing(), "uint8", data_file, std::nullopt);
}

}  // namespace milq
