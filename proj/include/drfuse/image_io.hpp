#pragma once

#include <csetjmp>
#include <cstdio>
#include <cstring>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include <jpeglib.h>
#include <png.h>

#include "drfuse/error.hpp"
#include "drfuse/image.hpp"
#include "drfuse/util/binary_io.hpp"

namespace drfuse {

namespace detail {

struct PngMemoryReader {
    const unsigned char* data;
    std::size_t size;
    std::size_t pos;
};

inline void png_read_from_memory(png_structp png, png_bytep out, png_size_t n)
{
    auto* src = static_cast<PngMemoryReader*>(png_get_io_ptr(png));
    if (n > src->size - src->pos)
        png_error(png, "unexpected end of PNG data");
    std::memcpy(out, src->data + src->pos, n);
    src->pos += n;
}

inline void png_write_to_string(png_structp png, png_bytep in, png_size_t n)
{
    static_cast<std::string*>(png_get_io_ptr(png))->append(reinterpret_cast<const char*>(in), n);
}

inline void png_flush_noop(png_structp) {}

struct PngErrorState {
    std::jmp_buf jump;
    char message[256];
};

inline void png_error_to_jump(png_structp png, png_const_charp msg)
{
    auto* st = static_cast<PngErrorState*>(png_get_error_ptr(png));
    std::snprintf(st->message, sizeof st->message, "%s", msg);
    std::longjmp(st->jump, 1);
}

inline void png_warning_ignore(png_structp, png_const_charp) {}

inline RasterImage decode_png(std::string_view bytes)
{
    PngErrorState err{};
    png_structp png = png_create_read_struct(PNG_LIBPNG_VER_STRING, &err, png_error_to_jump, png_warning_ignore);
    if (!png)
        fail(Errc::DecodeError, "png_create_read_struct failed");
    png_infop info = png_create_info_struct(png);
    PngMemoryReader src{reinterpret_cast<const unsigned char*>(bytes.data()), bytes.size(), 0};
    RasterImage out;
    std::vector<png_bytep> rows;
    bool gray_alpha = false;

    if (setjmp(err.jump)) {
        png_destroy_read_struct(&png, &info, nullptr);
        fail(Errc::DecodeError, std::string("PNG: ") + err.message);
    }
    png_set_read_fn(png, &src, png_read_from_memory);
    png_read_info(png, info);

    const int color = png_get_color_type(png, info);
    const int depth = png_get_bit_depth(png, info);
    if (color == PNG_COLOR_TYPE_GRAY_ALPHA) {
        gray_alpha = true;
    } else {
        if (depth == 16)
            png_set_strip_16(png); // keeps the high byte, i.e. v >> 8
        if (color == PNG_COLOR_TYPE_PALETTE)
            png_set_palette_to_rgb(png);
        if (color == PNG_COLOR_TYPE_GRAY && depth < 8)
            png_set_expand_gray_1_2_4_to_8(png);
        if (color & PNG_COLOR_MASK_ALPHA)
            png_set_strip_alpha(png);
        png_set_interlace_handling(png);
        png_read_update_info(png, info);

        const int w = static_cast<int>(png_get_image_width(png, info));
        const int h = static_cast<int>(png_get_image_height(png, info));
        const int ch = png_get_channels(png, info);
        if (ch == 1 || ch == 3) {
            out = RasterImage(w, h, ch);
            rows.resize(static_cast<std::size_t>(h));
            for (int y = 0; y < h; ++y)
                rows[y] = out.data.data() + static_cast<std::size_t>(y) * w * ch;
            png_read_image(png, rows.data());
            png_read_end(png, nullptr);
        } else {
            png_destroy_read_struct(&png, &info, nullptr);
            fail(Errc::UnsupportedChannelCount, "PNG decodes to " + std::to_string(ch) + " channels");
        }
    }
    png_destroy_read_struct(&png, &info, nullptr);
    if (gray_alpha)
        fail(Errc::UnsupportedChannelCount, "2-channel (gray+alpha) PNG");
    return out;
}

struct JpegErrorState {
    jpeg_error_mgr mgr;
    std::jmp_buf jump;
    char message[JMSG_LENGTH_MAX];
};

inline void jpeg_error_to_jump(j_common_ptr cinfo)
{
    auto* st = reinterpret_cast<JpegErrorState*>(cinfo->err);
    (*cinfo->err->format_message)(cinfo, st->message);
    std::longjmp(st->jump, 1);
}

// Corrupt-data warnings (premature end of stream etc.) are treated as fatal.
inline void jpeg_emit_message(j_common_ptr cinfo, int level)
{
    if (level < 0)
        jpeg_error_to_jump(cinfo);
}

inline RasterImage decode_jpeg(std::string_view bytes)
{
    jpeg_decompress_struct cinfo{};
    JpegErrorState err{};
    cinfo.err = jpeg_std_error(&err.mgr);
    err.mgr.error_exit = jpeg_error_to_jump;
    err.mgr.emit_message = jpeg_emit_message;
    RasterImage out;
    bool bad_channels = false;
    int components = 0;

    if (setjmp(err.jump)) {
        jpeg_destroy_decompress(&cinfo);
        fail(Errc::DecodeError, std::string("JPEG: ") + err.message);
    }
    jpeg_create_decompress(&cinfo);
    jpeg_mem_src(&cinfo, reinterpret_cast<const unsigned char*>(bytes.data()), static_cast<unsigned long>(bytes.size()));
    jpeg_read_header(&cinfo, TRUE);
    if (cinfo.jpeg_color_space == JCS_GRAYSCALE) {
        cinfo.out_color_space = JCS_GRAYSCALE;
    } else if (cinfo.num_components == 3) {
        cinfo.out_color_space = JCS_RGB;
    } else {
        bad_channels = true;
        components = cinfo.num_components;
    }
    if (!bad_channels) {
        jpeg_start_decompress(&cinfo);
        const int w = static_cast<int>(cinfo.output_width);
        const int h = static_cast<int>(cinfo.output_height);
        const int ch = cinfo.output_components;
        out = RasterImage(w, h, ch);
        while (cinfo.output_scanline < cinfo.output_height) {
            JSAMPROW row = out.data.data() + static_cast<std::size_t>(cinfo.output_scanline) * w * ch;
            jpeg_read_scanlines(&cinfo, &row, 1);
        }
        jpeg_finish_decompress(&cinfo);
    }
    jpeg_destroy_decompress(&cinfo);
    if (bad_channels)
        fail(Errc::UnsupportedChannelCount, "JPEG with " + std::to_string(components) + " components");
    return out;
}

} // namespace detail

/// Decodes PNG or JPEG bytes, sniffed by signature.
inline RasterImage decode_image(std::string_view bytes)
{
    static constexpr unsigned char png_sig[8] = {0x89, 'P', 'N', 'G', '\r', '\n', 0x1a, '\n'};
    if (bytes.size() >= 8 && std::memcmp(bytes.data(), png_sig, 8) == 0)
        return detail::decode_png(bytes);
    if (bytes.size() >= 3 && static_cast<unsigned char>(bytes[0]) == 0xff
        && static_cast<unsigned char>(bytes[1]) == 0xd8 && static_cast<unsigned char>(bytes[2]) == 0xff)
        return detail::decode_jpeg(bytes);
    fail(Errc::DecodeError, "not a PNG or JPEG stream");
}

inline RasterImage load_image(const std::filesystem::path& path)
{
    std::error_code ec;
    if (!std::filesystem::is_regular_file(path, ec))
        fail(Errc::FileNotFound, path.string());
    try {
        return decode_image(read_file(path));
    } catch (const Error& e) {
        throw Error(e.code(), path.string() + ": " + e.what());
    }
}

/// 8-bit PNG encoding of a 1- or 3-channel raster.
inline std::string encode_png(const RasterImage& img)
{
    if (img.empty())
        fail(Errc::EmptyImage, "encode_png on empty image");
    std::string buf;
    detail::PngErrorState err{};
    png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, &err, detail::png_error_to_jump,
                                              detail::png_warning_ignore);
    if (!png)
        fail(Errc::IoError, "png_create_write_struct failed");
    png_infop info = png_create_info_struct(png);
    std::vector<png_bytep> rows(static_cast<std::size_t>(img.height));
    if (setjmp(err.jump)) {
        png_destroy_write_struct(&png, &info);
        fail(Errc::IoError, std::string("PNG encode: ") + err.message);
    }
    png_set_write_fn(png, &buf, detail::png_write_to_string, detail::png_flush_noop);
    png_set_IHDR(png, info, static_cast<png_uint_32>(img.width), static_cast<png_uint_32>(img.height), 8,
                 img.channels == 3 ? PNG_COLOR_TYPE_RGB : PNG_COLOR_TYPE_GRAY, PNG_INTERLACE_NONE,
                 PNG_COMPRESSION_TYPE_DEFAULT, PNG_FILTER_TYPE_DEFAULT);
    png_write_info(png, info);
    for (int y = 0; y < img.height; ++y)
        rows[y] = const_cast<png_bytep>(img.data.data() + static_cast<std::size_t>(y) * img.width * img.channels);
    png_write_image(png, rows.data());
    png_write_end(png, nullptr);
    png_destroy_write_struct(&png, &info);
    return buf;
}

inline void save_png(const std::filesystem::path& path, const RasterImage& img)
{
    write_file_atomic(path, encode_png(img));
}

inline void save_png(const std::filesystem::path& path, const GrayImage& img)
{
    RasterImage r(img.width, img.height, 1);
    r.data = img.data;
    save_png(path, r);
}

} // namespace drfuse
