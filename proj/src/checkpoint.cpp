#include "flearn/checkpoint.hpp"

#include <bit>
#include <cstdint>
#include <fstream>
#include <limits>
#include <stdexcept>

namespace flearn {

static_assert(std::endian::native == std::endian::little,
              "checkpoint I/O assumes a little-endian host");
static_assert(sizeof(double) == 8 && std::numeric_limits<double>::is_iec559,
              "checkpoint I/O assumes IEEE-754 binary64");

namespace {

constexpr char kMagic[4] = {'F', 'L', 'P', 'C'};
constexpr unsigned char kVersion = 0x01;

[[noreturn]] void fail(const std::filesystem::path& path, const std::string& why) {
    throw std::runtime_error("checkpoint: " + path.string() + ": " + why);
}

template <typename T>
void write_raw(std::ostream& out, const T& v) {
    out.write(reinterpret_cast<const char*>(&v), sizeof(T));
}

template <typename T>
T read_raw(std::istream& in, const std::filesystem::path& path) {
    T v{};
    in.read(reinterpret_cast<char*>(&v), sizeof(T));
    if (!in) fail(path, "unexpected end of file");
    return v;
}

}  // namespace

void save_checkpoint(const std::filesystem::path& path, const std::vector<VarPtr>& params) {
    std::ofstream out(path, std::ios::binary);
    if (!out) fail(path, "cannot open for writing");
    out.write(kMagic, 4);
    write_raw(out, kVersion);
    write_raw(out, static_cast<std::uint32_t>(params.size()));
    for (const VarPtr& p : params) {
        if (!p || p->name.empty()) fail(path, "cannot serialize an unnamed parameter");
        if (p->name.size() > std::numeric_limits<std::uint16_t>::max()) {
            fail(path, "parameter name too long: " + p->name);
        }
        write_raw(out, static_cast<std::uint16_t>(p->name.size()));
        out.write(p->name.data(), static_cast<std::streamsize>(p->name.size()));
        write_raw(out, static_cast<std::uint8_t>(p->value.rank()));
        for (int d : p->value.shape()) write_raw(out, static_cast<std::uint32_t>(d));
        out.write(reinterpret_cast<const char*>(p->value.data()),
                  static_cast<std::streamsize>(p->value.size() * sizeof(double)));
    }
    if (!out) fail(path, "write failed");
}

std::vector<std::pair<std::string, Tensor>> load_checkpoint(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) fail(path, "cannot open");
    char magic[4];
    in.read(magic, 4);
    if (!in || std::string(magic, 4) != std::string(kMagic, 4)) fail(path, "bad magic");
    if (read_raw<std::uint8_t>(in, path) != kVersion) fail(path, "unsupported version");
    const auto count = read_raw<std::uint32_t>(in, path);
    std::vector<std::pair<std::string, Tensor>> entries;
    entries.reserve(count);
    for (std::uint32_t i = 0; i < count; ++i) {
        const auto name_len = read_raw<std::uint16_t>(in, path);
        std::string name(name_len, '\0');
        in.read(name.data(), name_len);
        if (!in) fail(path, "unexpected end of file in name");
        const auto ndim = read_raw<std::uint8_t>(in, path);
        std::vector<int> shape(ndim);
        for (auto& d : shape) {
            const auto v = read_raw<std::uint32_t>(in, path);
            if (v == 0 || v > static_cast<std::uint32_t>(std::numeric_limits<int>::max())) {
                fail(path, "invalid dimension in entry '" + name + "'");
            }
            d = static_cast<int>(v);
        }
        Tensor t(shape);
        in.read(reinterpret_cast<char*>(t.data()),
                static_cast<std::streamsize>(t.size() * sizeof(double)));
        if (!in) fail(path, "unexpected end of file in values of '" + name + "'");
        entries.emplace_back(std::move(name), std::move(t));
    }
    return entries;
}

void apply_checkpoint(std::vector<VarPtr>& params,
                      const std::vector<std::pair<std::string, Tensor>>& loaded) {
    if (params.size() != loaded.size()) {
        throw std::runtime_error("checkpoint: expected " + std::to_string(params.size()) +
                                 " parameters, file has " + std::to_string(loaded.size()));
    }
    for (std::size_t i = 0; i < params.size(); ++i) {
        Var& p = *params[i];
        const auto& [name, value] = loaded[i];
        if (p.name != name) {
            throw std::runtime_error("checkpoint: parameter " + std::to_string(i) + " is '" +
                                     name + "', model expects '" + p.name + "'");
        }
        if (!p.value.same_shape(value)) {
            throw std::runtime_error("checkpoint: shape of '" + name + "' is " +
                                     shape_to_string(value.shape()) + ", model expects " +
                                     shape_to_string(p.value.shape()));
        }
        p.value = value;
    }
}

}  // namespace flearn
