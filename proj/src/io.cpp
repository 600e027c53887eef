#include "phpol/io.hpp"

#include <png.h>

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <limits>
#include <memory>
#include <sstream>

namespace phpol::io {
namespace {

std::uint32_t to_little_endian(std::uint32_t v) {
    if constexpr (std::endian::native == std::endian::little) return v;
    return ((v & 0xffu) << 24) | ((v & 0xff00u) << 8) | ((v >> 8) & 0xff00u) | (v >> 24);
}

std::string trim(const std::string& s) {
    const auto b = s.find_first_not_of(" \t\r\n");
    if (b == std::string::npos) return {};
    const auto e = s.find_last_not_of(" \t\r\n");
    return s.substr(b, e - b + 1);
}

void check_congruent(std::span<const Grid> channels) {
    if (channels.empty()) throw ValidationError("no_channels", "float map needs at least one channel");
    for (const auto& c : channels)
        if (!c.same_shape(channels.front()))
            throw ValidationError("shape_mismatch", "float map channels differ in shape");
}

}  // namespace

void write_float_map(const std::filesystem::path& path, std::span<const Grid> channels) {
    check_congruent(channels);
    const int w = channels.front().width();
    const int h = channels.front().height();
    const auto nc = channels.size();
    std::ofstream out(path, std::ios::binary);
    if (!out) throw ValidationError("io_error", "cannot open " + path.string() + " for writing");
    out << "PHMAP " << w << ' ' << h << ' ' << nc << '\n';
    std::vector<std::uint32_t> buf(static_cast<std::size_t>(w) * h * nc);
    for (std::size_t p = 0; p < channels.front().size(); ++p) {
        for (std::size_t c = 0; c < nc; ++c) {
            const float v = channels[c].valid(p) ? static_cast<float>(channels[c][p])
                                                 : std::numeric_limits<float>::quiet_NaN();
            buf[p * nc + c] = to_little_endian(std::bit_cast<std::uint32_t>(v));
        }
    }
    out.write(reinterpret_cast<const char*>(buf.data()),
              static_cast<std::streamsize>(buf.size() * sizeof(std::uint32_t)));
    if (!out) throw ValidationError("io_error", "failed writing " + path.string());
}

void write_float_map(const std::filesystem::path& path, const Grid& grid) {
    write_float_map(path, std::span<const Grid>(&grid, 1));
}

ChannelGrids read_float_map(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ValidationError("file_not_found", "cannot open " + path.string());
    std::string header;
    std::getline(in, header);
    std::istringstream hs(header);
    std::string magic;
    long w = 0, h = 0, nc = 0;
    if (!(hs >> magic >> w >> h >> nc) || magic != "PHMAP" || w <= 0 || h <= 0 || nc <= 0 ||
        w > (1 << 20) || h > (1 << 20) || nc > 1024)
        throw ValidationError("bad_float_map", "malformed float map header in " + path.string());
    std::vector<std::uint32_t> buf(static_cast<std::size_t>(w) * h * nc);
    in.read(reinterpret_cast<char*>(buf.data()), static_cast<std::streamsize>(buf.size() * 4));
    if (in.gcount() != static_cast<std::streamsize>(buf.size() * 4))
        throw ValidationError("bad_float_map", "truncated float map " + path.string());
    ChannelGrids out(static_cast<std::size_t>(nc), Grid(static_cast<int>(w), static_cast<int>(h)));
    for (std::size_t p = 0; p < out.front().size(); ++p) {
        for (std::size_t c = 0; c < out.size(); ++c) {
            const float v = std::bit_cast<float>(to_little_endian(buf[p * nc + c]));
            out[c][p] = std::isnan(v) ? 0.0 : static_cast<double>(v);
            out[c].set_valid(p, !std::isnan(v));
        }
    }
    return out;
}

Grid read_single_channel(const std::filesystem::path& path) {
    auto grids = read_float_map(path);
    if (grids.size() != 1)
        throw ValidationError("bad_float_map", path.string() + " must have exactly one channel");
    return std::move(grids.front());
}

void write_png8(const std::filesystem::path& path, std::span<const Grid> channels, double scale) {
    check_congruent(channels);
    if (channels.size() != 1 && channels.size() != 3)
        throw ValidationError("bad_png_channels", "PNG export needs 1 or 3 channels");
    const int w = channels.front().width();
    const int h = channels.front().height();
    const int nc = static_cast<int>(channels.size());

    std::unique_ptr<FILE, int (*)(FILE*)> fp(std::fopen(path.c_str(), "wb"), &std::fclose);
    if (!fp) throw ValidationError("io_error", "cannot open " + path.string() + " for writing");
    png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
    png_infop info = png ? png_create_info_struct(png) : nullptr;
    if (!png || !info) {
        png_destroy_write_struct(&png, &info);
        throw ValidationError("io_error", "libpng initialisation failed");
    }
    std::vector<png_byte> row(static_cast<std::size_t>(w) * nc);
    if (setjmp(png_jmpbuf(png))) {
        png_destroy_write_struct(&png, &info);
        throw ValidationError("io_error", "libpng failed writing " + path.string());
    }
    png_init_io(png, fp.get());
    png_set_IHDR(png, info, w, h, 8, nc == 1 ? PNG_COLOR_TYPE_GRAY : PNG_COLOR_TYPE_RGB,
                 PNG_INTERLACE_NONE, PNG_COMPRESSION_TYPE_DEFAULT, PNG_FILTER_TYPE_DEFAULT);
    png_write_info(png, info);
    for (int y = 0; y < h; ++y) {
        for (int x = 0; x < w; ++x) {
            for (int c = 0; c < nc; ++c) {
                const auto& g = channels[c];
                const double v = g.valid(x, y) ? std::clamp(g(x, y) * scale, 0.0, 1.0) : 0.0;
                row[static_cast<std::size_t>(x) * nc + c] = static_cast<png_byte>(std::lround(v * 255.0));
            }
        }
        png_write_row(png, row.data());
    }
    png_write_end(png, nullptr);
    png_destroy_write_struct(&png, &info);
}

KeyValueConfig KeyValueConfig::parse(const std::string& text) {
    KeyValueConfig cfg;
    std::istringstream in(text);
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
        line = trim(line);
        if (line.empty()) continue;
        const auto eq = line.find('=');
        if (eq == std::string::npos)
            throw ValidationError("bad_config", "line " + std::to_string(lineno) + ": expected key = value");
        const auto key = trim(line.substr(0, eq));
        if (key.empty()) throw ValidationError("bad_config", "line " + std::to_string(lineno) + ": empty key");
        cfg.entries_[key] = trim(line.substr(eq + 1));
    }
    return cfg;
}

KeyValueConfig KeyValueConfig::load(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw ValidationError("file_not_found", "cannot open config " + path.string());
    std::stringstream ss;
    ss << in.rdbuf();
    return parse(ss.str());
}

std::string KeyValueConfig::get_string(const std::string& key, const std::string& fallback) const {
    auto it = entries_.find(key);
    return it == entries_.end() ? fallback : it->second;
}

double KeyValueConfig::get_double(const std::string& key, double fallback) const {
    auto it = entries_.find(key);
    if (it == entries_.end()) return fallback;
    try {
        std::size_t used = 0;
        const double v = std::stod(it->second, &used);
        if (used != it->second.size()) throw std::invalid_argument("trailing");
        return v;
    } catch (const std::exception&) {
        throw ValidationError("bad_config", "key '" + key + "' is not a number: " + it->second);
    }
}

int KeyValueConfig::get_int(const std::string& key, int fallback) const {
    const double v = get_double(key, fallback);
    if (v != std::floor(v) || std::fabs(v) > 1e9)
        throw ValidationError("bad_config", "key '" + key + "' must be an integer");
    return static_cast<int>(v);
}

std::vector<double> KeyValueConfig::get_list(const std::string& key, const std::vector<double>& fallback) const {
    auto it = entries_.find(key);
    if (it == entries_.end()) return fallback;
    return parse_number_list(it->second);
}

std::string KeyValueConfig::to_string() const {
    std::ostringstream out;
    for (const auto& [k, v] : entries_) out << k << " = " << v << '\n';
    return out.str();
}

std::vector<double> parse_number_list(const std::string& text) {
    std::string norm = text;
    std::replace(norm.begin(), norm.end(), ',', ' ');
    std::replace(norm.begin(), norm.end(), ';', ' ');
    std::istringstream in(norm);
    std::vector<double> out;
    std::string tok;
    while (in >> tok) {
        try {
            std::size_t used = 0;
            out.push_back(std::stod(tok, &used));
            if (used != tok.size()) throw std::invalid_argument("trailing");
        } catch (const std::exception&) {
            throw ValidationError("bad_number_list", "not a number: '" + tok + "'");
        }
    }
    return out;
}

}  // namespace phpol::io
