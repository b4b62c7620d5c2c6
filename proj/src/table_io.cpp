#include "evac/table_io.hpp"

#include <bit>
#include <cstring>
#include <fstream>

namespace evac {

namespace {

constexpr std::size_t kHeaderSize = 4 + 2 + 1 + 32 + 16;

template <class T>
void put_le(std::string& out, T value) {
  for (std::size_t i = 0; i < sizeof(T); ++i) {
    out.push_back(static_cast<char>((static_cast<std::uint64_t>(value) >> (8 * i)) & 0xff));
  }
}

template <class T>
T get_le(const unsigned char* p) {
  std::uint64_t v = 0;
  for (std::size_t i = 0; i < sizeof(T); ++i) v |= static_cast<std::uint64_t>(p[i]) << (8 * i);
  return static_cast<T>(v);
}

std::string encode_header(const char* magic, const TableHeader& h) {
  std::string out(magic, 4);
  put_le<std::uint16_t>(out, kTableFormatVersion);
  put_le<std::uint8_t>(out, static_cast<std::uint8_t>(h.level));
  out.append(reinterpret_cast<const char*>(h.digest.data()), h.digest.size());
  put_le<std::uint32_t>(out, static_cast<std::uint32_t>(h.space.c_range()));
  put_le<std::uint32_t>(out, static_cast<std::uint32_t>(h.space.t_range()));
  put_le<std::uint32_t>(out, static_cast<std::uint32_t>(h.space.f_range()));
  put_le<std::uint32_t>(out, static_cast<std::uint32_t>(kNumCategories));
  return out;
}

TableHeader read_header(std::ifstream& in, const char* magic, const std::string& path) {
  unsigned char buf[kHeaderSize];
  if (!in.read(reinterpret_cast<char*>(buf), kHeaderSize)) {
    throw TableFormatError(path + ": truncated header");
  }
  if (std::memcmp(buf, magic, 4) != 0) {
    throw TableFormatError(path + ": bad magic, expected " + std::string(magic, 4));
  }
  const auto version = get_le<std::uint16_t>(buf + 4);
  if (version != kTableFormatVersion) {
    throw TableFormatError(path + ": unsupported format version " + std::to_string(version));
  }
  const auto tag = get_le<std::uint8_t>(buf + 6);
  if (tag < 1 || tag > 4) throw TableFormatError(path + ": bad level tag");
  TableHeader h;
  h.level = static_cast<Level>(tag);
  std::memcpy(h.digest.data(), buf + 7, h.digest.size());
  const auto c_range = get_le<std::uint32_t>(buf + 39);
  const auto t_range = get_le<std::uint32_t>(buf + 43);
  const auto f_range = get_le<std::uint32_t>(buf + 47);
  const auto v_range = get_le<std::uint32_t>(buf + 51);
  if (v_range != kNumCategories || f_range < 1 || t_range < 2 || c_range <= f_range ||
      c_range > (1u << 24) || t_range > (1u << 24) || f_range > 1024) {
    throw TableFormatError(path + ": implausible dimensions");
  }
  const int f_max = static_cast<int>(f_range);
  h.space = StateSpace(static_cast<int>(c_range) - f_max, static_cast<int>(t_range) - 1, f_max);
  return h;
}

void check_digest(const TableHeader& h, const Digest& expected, const std::string& path) {
  if (h.digest != expected) {
    throw DomainError(path + ": params digest mismatch (file " + to_hex(h.digest) +
                      ", expected " + to_hex(expected) + ")");
  }
}

std::ofstream open_out(const std::string& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error("cannot open for writing: " + path);
  return out;
}

std::ifstream open_in(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open: " + path);
  return in;
}

void expect_eof(std::ifstream& in, const std::string& path) {
  if (in.peek() != std::char_traits<char>::eof()) {
    throw TableFormatError(path + ": trailing bytes after payload");
  }
}

}  // namespace

void save_policy(const PolicyTable& table, const std::string& path) {
  std::ofstream out = open_out(path);
  const std::string header = encode_header("EVPT", table.header());
  out.write(header.data(), static_cast<std::streamsize>(header.size()));
  out.write(reinterpret_cast<const char*>(table.actions().data()),
            static_cast<std::streamsize>(table.actions().size()));
  if (!out) throw std::runtime_error("write failed: " + path);
}

PolicyTable load_policy(const std::string& path, const std::optional<Digest>& expected) {
  std::ifstream in = open_in(path);
  const TableHeader h = read_header(in, "EVPT", path);
  if (expected) check_digest(h, *expected, path);
  std::vector<std::uint8_t> actions(h.space.nonterminal_size());
  if (!in.read(reinterpret_cast<char*>(actions.data()), static_cast<std::streamsize>(actions.size()))) {
    throw TableFormatError(path + ": truncated payload");
  }
  expect_eof(in, path);
  for (std::uint8_t a : actions) {
    if (a > 1) throw TableFormatError(path + ": invalid action byte");
  }
  return PolicyTable(h, std::move(actions));
}

void save_values(const ValueTable& table, const std::string& path) {
  std::ofstream out = open_out(path);
  const std::string header = encode_header("EVVT", table.header());
  out.write(header.data(), static_cast<std::streamsize>(header.size()));
  const StateSpace& space = table.space();
  std::string chunk;
  chunk.reserve(space.arrivals() * sizeof(double) * space.t_range());
  for (int c = space.c_min(); c <= space.c_max(); ++c) {
    chunk.clear();
    for (int t = 0; t <= space.t_max(); ++t) {
      for (int f = 1; f <= space.f_max(); ++f) {
        for (Category v : kAllCategories) {
          put_le<std::uint64_t>(chunk, std::bit_cast<std::uint64_t>(table.value({c, t, f, v, false})));
        }
      }
    }
    out.write(chunk.data(), static_cast<std::streamsize>(chunk.size()));
  }
  if (!out) throw std::runtime_error("write failed: " + path);
}

ValueTable load_values(const std::string& path, const ModelParams& params) {
  std::ifstream in = open_in(path);
  const TableHeader h = read_header(in, "EVVT", path);
  check_digest(h, params_digest(params), path);
  if (!(h.space == StateSpace(params))) throw TableFormatError(path + ": dimensions differ from params");
  ArrivalModel model = ArrivalModel::build(h.level, params);

  const StateSpace& space = h.space;
  const std::size_t arrivals = space.arrivals();
  std::vector<double> w(space.c_range() * space.t_range(), 0.0);
  std::vector<unsigned char> cell(arrivals * sizeof(double));
  for (int c = space.c_min(); c <= space.c_max(); ++c) {
    for (int t = 0; t <= space.t_max(); ++t) {
      if (!in.read(reinterpret_cast<char*>(cell.data()), static_cast<std::streamsize>(cell.size()))) {
        throw TableFormatError(path + ": truncated payload");
      }
      // Same accumulation order as the backup kernels, so W is reproduced exactly.
      double acc = 0.0;
      for (std::size_t i = 0; i < arrivals; ++i) {
        const double v = std::bit_cast<double>(get_le<std::uint64_t>(cell.data() + i * sizeof(double)));
        acc += model.probability[i] * v;
      }
      if (c >= 1 && t >= 1) {
        w[static_cast<std::size_t>(t) * space.c_range() + static_cast<std::size_t>(c - space.c_min())] = acc;
      }
    }
  }
  expect_eof(in, path);
  return ValueTable(h, std::move(model), std::move(w));
}

}  // namespace evac
