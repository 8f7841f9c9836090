#pragma once

#include <string>

#include "nudgesim/image.hpp"

namespace nudgesim {

/// Binary PGM (P5), maxval 65535, samples big-endian per the PGM standard.
void write_pgm16(const std::string& path, const LabelImage& img);
LabelImage read_pgm16(const std::string& path);

} // namespace nudgesim
