#pragma once

#include <bit>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "drfuse/error.hpp"

namespace drfuse {

/// Little-endian byte sink used by the model and cache containers.
class ByteWriter {
public:
    void bytes(std::string_view s) { buf_.append(s); }

    void u8(std::uint8_t v) { buf_.push_back(static_cast<char>(v)); }

    void u32(std::uint32_t v)
    {
        for (int i = 0; i < 4; ++i)
            buf_.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
    }

    void u64(std::uint64_t v)
    {
        for (int i = 0; i < 8; ++i)
            buf_.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
    }

    void i32(std::int32_t v) { u32(static_cast<std::uint32_t>(v)); }
    void i64(std::int64_t v) { u64(static_cast<std::uint64_t>(v)); }
    void f64(double v) { u64(std::bit_cast<std::uint64_t>(v)); }

    void str(std::string_view s)
    {
        u32(static_cast<std::uint32_t>(s.size()));
        buf_.append(s);
    }

    void f64s(std::span<const double> v)
    {
        u64(v.size());
        for (double d : v)
            f64(d);
    }

    const std::string& data() const noexcept { return buf_; }
    std::string take() noexcept { return std::move(buf_); }

private:
    std::string buf_;
};

/// Bounds-checked reader; any overrun raises `overrun_code`.
class ByteReader {
public:
    ByteReader(std::string_view data, Errc overrun_code) : data_(data), code_(overrun_code) {}

    std::string_view bytes(std::size_t n)
    {
        need(n);
        auto s = data_.substr(pos_, n);
        pos_ += n;
        return s;
    }

    std::uint8_t u8() { return static_cast<std::uint8_t>(bytes(1)[0]); }

    std::uint32_t u32()
    {
        auto s = bytes(4);
        std::uint32_t v = 0;
        for (int i = 0; i < 4; ++i)
            v |= static_cast<std::uint32_t>(static_cast<unsigned char>(s[i])) << (8 * i);
        return v;
    }

    std::uint64_t u64()
    {
        auto s = bytes(8);
        std::uint64_t v = 0;
        for (int i = 0; i < 8; ++i)
            v |= static_cast<std::uint64_t>(static_cast<unsigned char>(s[i])) << (8 * i);
        return v;
    }

    std::int32_t i32() { return static_cast<std::int32_t>(u32()); }
    std::int64_t i64() { return static_cast<std::int64_t>(u64()); }
    double f64() { return std::bit_cast<double>(u64()); }

    std::string str()
    {
        const auto n = u32();
        return std::string(bytes(n));
    }

    std::vector<double> f64s()
    {
        const auto n = u64();
        need(n * 8);
        std::vector<double> v(n);
        for (auto& d : v)
            d = f64();
        return v;
    }

    bool at_end() const noexcept { return pos_ == data_.size(); }

private:
    void need(std::size_t n) const
    {
        if (n > data_.size() - pos_)
            fail(code_, "truncated binary payload");
    }

    std::string_view data_;
    std::size_t pos_ = 0;
    Errc code_;
};

inline std::string read_file(const std::filesystem::path& path)
{
    std::ifstream in(path, std::ios::binary);
    if (!in)
        fail(Errc::FileNotFound, path.string());
    return std::string(std::istreambuf_iterator<char>(in), {});
}

/// Writes via a sibling temp file and rename so readers never see partial data.
inline void write_file_atomic(const std::filesystem::path& path, std::string_view content)
{
    auto tmp = path;
    tmp += ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out)
            fail(Errc::IoError, "cannot open " + tmp.string() + " for writing");
        out.write(content.data(), static_cast<std::streamsize>(content.size()));
        if (!out)
            fail(Errc::IoError, "write failed: " + tmp.string());
    }
    std::error_code ec;
    std::filesystem::rename(tmp, path, ec);
    if (ec)
        fail(Errc::IoError, "rename failed: " + path.string() + ": " + ec.message());
}

} // namespace drfuse
