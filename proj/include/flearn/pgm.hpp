#pragma once

#include <filesystem>
#include <vector>

namespace flearn {

struct PgmImage {
    int width = 0;
    int height = 0;
    std::vector<unsigned char> pixels;  // row-major
};

/// Writes binary PGM (P5, maxval 255). The header is exactly
/// "P5\n<width> <height>\n255\n".
void write_pgm(const std::filesystem::path& path, const PgmImage& image);

/// Reads binary PGM, accepting whitespace and '#' comments in the header.
/// Throws std::runtime_error naming the file on malformed headers, a maxval
/// other than 255, or truncated pixel data.
PgmImage read_pgm(const std::filesystem::path& path);

}  // namespace flearn
