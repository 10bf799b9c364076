#include "flearn/pgm.hpp"

#include <fstream>
#include <stdexcept>
#include <string>

namespace flearn {

namespace {

[[noreturn]] void fail(const std::filesystem::path& path, const std::string& why) {
    throw std::runtime_error("pgm: " + path.string() + ": " + why);
}

// Next whitespace-delimited token, skipping '#' comments to end of line.
std::string next_token(std::istream& in) {
    std::string tok;
    int c;
    while ((c = in.get()) != EOF) {
        if (c == '#') {
            while ((c = in.get()) != EOF && c != '\n') {
            }
        } else if (!std::isspace(c)) {
            tok.push_back(static_cast<char>(c));
            while ((c = in.get()) != EOF && !std::isspace(c) && c != '#') {
                tok.push_back(static_cast<char>(c));
            }
            if (c == '#') in.unget();
            break;
        }
    }
    return tok;
}

int parse_dim(const std::filesystem::path& path, const std::string& tok, const char* what) {
    if (tok.empty()) fail(path, std::string("missing ") + what);
    try {
        std::size_t pos = 0;
        const int v = std::stoi(tok, &pos);
        if (pos != tok.size() || v <= 0) fail(path, std::string("invalid ") + what + " '" + tok + "'");
        return v;
    } catch (const std::logic_error&) {
        fail(path, std::string("invalid ") + what + " '" + tok + "'");
    }
}

}  // namespace

void write_pgm(const std::filesystem::path& path, const PgmImage& image) {
    if (image.pixels.size() != static_cast<std::size_t>(image.width) * image.height) {
        throw std::invalid_argument("pgm: pixel count does not match dimensions");
    }
    std::ofstream out(path, std::ios::binary);
    if (!out) fail(path, "cannot open for writing");
    out << "P5\n" << image.width << " " << image.height << "\n255\n";
    out.write(reinterpret_cast<const char*>(image.pixels.data()),
              static_cast<std::streamsize>(image.pixels.size()));
    if (!out) fail(path, "write failed");
}

PgmImage read_pgm(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) fail(path, "cannot open");
    if (next_token(in) != "P5") fail(path, "not a binary PGM (expected P5 magic)");
    PgmImage img;
    img.width = parse_dim(path, next_token(in), "width");
    img.height = parse_dim(path, next_token(in), "height");
    const int maxval = parse_dim(path, next_token(in), "maxval");
    if (maxval != 255) fail(path, "unsupported maxval " + std::to_string(maxval));
    // Exactly one whitespace byte separates the header from the raster.
    img.pixels.resize(static_cast<std::size_t>(img.width) * img.height);
    in.read(reinterpret_cast<char*>(img.pixels.data()),
            static_cast<std::streamsize>(img.pixels.size()));
    if (in.gcount() != static_cast<std::streamsize>(img.pixels.size())) {
        fail(path, "truncated pixel data");
    }
    return img;
}

}  // namespace flearn
