#pragma once

#include <array>
#include <cstring>
#include <fstream>
#include <iomanip>
#include <string>

#include "otfsradar/frame.hpp"

namespace otfs::io {

/// I/O failure (missing file, bad magic, truncated payload).
struct IoError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

enum class GridDomain : std::uint32_t { DelayDoppler = 0, TimeFrequency = 1 };

namespace detail {

inline constexpr std::array<char, 8> kMagic = {'O', 'T', 'F', 'S', 'G', 'R', 'D', '\0'};
inline constexpr std::uint32_t kVersion = 1;

struct Header {
    std::array<char, 8> magic;
    std::uint32_t version;
    std::uint32_t domain;
    std::uint64_t rows;
    std::uint64_t cols;
};

template <class Tag>
void write_grid(std::ostream& os, const GridFrame<Tag>& frame, GridDomain domain) {
    Header h{kMagic, kVersion, static_cast<std::uint32_t>(domain), frame.rows(), frame.cols()};
    os.write(reinterpret_cast<const char*>(&h), sizeof(h));
    // row-major interleaved re/im, 64-bit floats; std::complex<double> layout
    // is guaranteed to be {re, im}.
    os.write(reinterpret_cast<const char*>(frame.data()),
             static_cast<std::streamsize>(frame.size() * sizeof(cd)));
    if (!os) throw IoError("frame write failed");
}

template <class Tag>
GridFrame<Tag> read_grid(std::istream& is, GridDomain expected) {
    Header h{};
    is.read(reinterpret_cast<char*>(&h), sizeof(h));
    if (!is || h.magic != kMagic) throw IoError("bad frame container magic");
    if (h.version != kVersion) throw IoError("unsupported frame container version");
    if (h.domain != static_cast<std::uint32_t>(expected)) throw IoError("frame domain tag mismatch");
    GridFrame<Tag> frame(static_cast<std::size_t>(h.rows), static_cast<std::size_t>(h.cols));
    is.read(reinterpret_cast<char*>(frame.data()),
            static_cast<std::streamsize>(frame.size() * sizeof(cd)));
    if (!is) throw IoError("truncated frame payload");
    return frame;
}

}  // namespace detail

inline void save(const std::string& path, const DDFrame& frame) {
    std::ofstream os(path, std::ios::binary);
    if (!os) throw IoError("cannot open for writing: " + path);
    detail::write_grid(os, frame, GridDomain::DelayDoppler);
}

inline void save(const std::string& path, const TFFrame& frame) {
    std::ofstream os(path, std::ios::binary);
    if (!os) throw IoError("cannot open for writing: " + path);
    detail::write_grid(os, frame, GridDomain::TimeFrequency);
}

inline DDFrame load_dd(const std::string& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw IoError("cannot open: " + path);
    return detail::read_grid<otfs::detail::DelayDopplerTag>(is, GridDomain::DelayDoppler);
}

inline TFFrame load_tf(const std::string& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw IoError("cannot open: " + path);
    return detail::read_grid<otfs::detail::TimeFrequencyTag>(is, GridDomain::TimeFrequency);
}

/// Debug dump: one "row,col,re,im" line per entry.
template <class Tag>
void save_csv(const std::string& path, const GridFrame<Tag>& frame) {
    std::ofstream os(path);
    if (!os) throw IoError("cannot open for writing: " + path);
    os << "row,col,re,im\n" << std::setprecision(17);
    for (std::size_t r = 0; r < frame.rows(); ++r)
        for (std::size_t c = 0; c < frame.cols(); ++c)
            os << r << ',' << c << ',' << frame(r, c).real() << ',' << frame(r, c).imag() << '\n';
    if (!os) throw IoError("csv write failed");
}

}  // namespace otfs::io
