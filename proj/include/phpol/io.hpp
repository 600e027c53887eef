#pragma once

#include <filesystem>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "phpol/pixel_grid.hpp"

namespace phpol::io {

/// Float map: ASCII header "PHMAP <w> <h> <channels>\n" followed by
/// row-major little-endian float32 samples, channels interleaved per pixel.
/// Masked-out pixels are stored as NaN and read back as masked-out.
void write_float_map(const std::filesystem::path& path, std::span<const Grid> channels);
void write_float_map(const std::filesystem::path& path, const Grid& grid);
ChannelGrids read_float_map(const std::filesystem::path& path);
/// Reads a map that must have exactly one channel.
Grid read_single_channel(const std::filesystem::path& path);

/// 8-bit PNG preview of one (grey) or three (RGB) channels. Values are
/// multiplied by `scale`, clamped to [0, 1] and rounded; masked-out pixels are black.
void write_png8(const std::filesystem::path& path, std::span<const Grid> channels, double scale = 1.0);

/// Flat `key = value` text. '#' starts a comment; blank lines are ignored.
class KeyValueConfig {
public:
    KeyValueConfig() = default;
    static KeyValueConfig parse(const std::string& text);
    static KeyValueConfig load(const std::filesystem::path& path);

    bool has(const std::string& key) const { return entries_.count(key) != 0; }
    void set(const std::string& key, const std::string& value) { entries_[key] = value; }

    std::string get_string(const std::string& key, const std::string& fallback) const;
    double get_double(const std::string& key, double fallback) const;
    int get_int(const std::string& key, int fallback) const;
    /// Comma- or whitespace-separated numbers.
    std::vector<double> get_list(const std::string& key, const std::vector<double>& fallback) const;

    std::string to_string() const;
    const std::map<std::string, std::string>& entries() const { return entries_; }

private:
    std::map<std::string, std::string> entries_;
};

std::vector<double> parse_number_list(const std::string& text);

}  // namespace phpol::io
