#include "demgrade/codec.hpp"

#include <csetjmp>
#include <cstring>

#include <png.h>
extern "C" {
#include <jpeglib.h>
}

#include "demgrade/binio.hpp"
#include "demgrade/errors.hpp"

namespace demgrade {

namespace {

constexpr uint8_t kPngSignature[8] = {0x89, 'P', 'N', 'G', 0x0d, 0x0a, 0x1a, 0x0a};

bool looks_like_png(std::span<const uint8_t> bytes) {
    return bytes.size() >= 8 && std::memcmp(bytes.data(), kPngSignature, 8) == 0;
}

bool looks_like_jpeg(std::span<const uint8_t> bytes) {
    return bytes.size() >= 2 && bytes[0] == 0xff && bytes[1] == 0xd8;
}

struct PngMemoryReader {
    const uint8_t* data;
    size_t size;
    size_t offset;
};

void png_read_from_memory(png_structp png, png_bytep out, png_size_t n) {
    auto* reader = static_cast<PngMemoryReader*>(png_get_io_ptr(png));
    if (reader->offset + n > reader->size) {
        png_error(png, "read past end of buffer");
        return;
    }
    std::memcpy(out, reader->data + reader->offset, n);
    reader->offset += n;
}

[[noreturn]] void png_throw_error(png_structp, png_const_charp msg) {
    throw DecodeError(std::string("PNG decode failed: ") + (msg ? msg : "unknown error"));
}

void png_ignore_warning(png_structp, png_const_charp) {}

Image decode_png(std::span<const uint8_t> bytes) {
    png_structp png =
        png_create_read_struct(PNG_LIBPNG_VER_STRING, nullptr, png_throw_error, png_ignore_warning);
    if (!png) throw DecodeError("failed to initialize PNG reader");
    png_infop info = png_create_info_struct(png);
    if (!info) {
        png_destroy_read_struct(&png, nullptr, nullptr);
        throw DecodeError("failed to initialize PNG reader");
    }
    struct Guard {
        png_structp p;
        png_infop i;
        ~Guard() { png_destroy_read_struct(&p, &i, nullptr); }
    } guard{png, info};

    PngMemoryReader reader{bytes.data(), bytes.size(), 0};
    png_set_read_fn(png, &reader, png_read_from_memory);
    png_read_info(png, info);

    const png_uint_32 width = png_get_image_width(png, info);
    const png_uint_32 height = png_get_image_height(png, info);
    const int color_type = png_get_color_type(png, info);
    const int bit_depth = png_get_bit_depth(png, info);
    if (width < 1 || height < 1) throw DecodeError("PNG has empty dimensions");

    // Normalize every source layout to 8-bit gray or 8-bit RGB.
    if (bit_depth == 16) png_set_strip_16(png);
    if (color_type == PNG_COLOR_TYPE_PALETTE) png_set_palette_to_rgb(png);
    if (color_type == PNG_COLOR_TYPE_GRAY && bit_depth < 8) png_set_expand_gray_1_2_4_to_8(png);
    const bool has_trns = png_get_valid(png, info, PNG_INFO_tRNS);
    if (has_trns) png_set_tRNS_to_alpha(png);
    if ((color_type & PNG_COLOR_MASK_ALPHA) || has_trns) png_set_strip_alpha(png);
    png_set_interlace_handling(png);
    png_read_update_info(png, info);

    const png_size_t row_bytes = png_get_rowbytes(png, info);
    const int channels = png_get_channels(png, info);
    if (channels != 1 && channels != 3)
        throw DecodeError("unsupported PNG channel count after normalization");

    std::vector<uint8_t> raw(row_bytes * height);
    std::vector<png_bytep> rows(height);
    for (png_uint_32 y = 0; y < height; ++y) rows[y] = raw.data() + y * row_bytes;
    png_read_image(png, rows.data());
    png_read_end(png, nullptr);

    Image img(static_cast<int>(width), static_cast<int>(height));
    if (channels == 1) {
        for (png_uint_32 y = 0; y < height; ++y)
            std::memcpy(img.pixels.data() + y * width, rows[y], width);
    } else {
        for (png_uint_32 y = 0; y < height; ++y) {
            const uint8_t* src = rows[y];
            for (png_uint_32 x = 0; x < width; ++x)
                img.pixels[y * width + x] =
                    luma_from_rgb(src[3 * x], src[3 * x + 1], src[3 * x + 2]);
        }
    }
    return img;
}

struct JpegErrorContext {
    jpeg_error_mgr mgr;
    jmp_buf jump;
    char message[JMSG_LENGTH_MAX];
};

void jpeg_error_longjmp(j_common_ptr cinfo) {
    auto* ctx = reinterpret_cast<JpegErrorContext*>(cinfo->err);
    (*cinfo->err->format_message)(cinfo, ctx->message);
    longjmp(ctx->jump, 1);
}

Image decode_jpeg(std::span<const uint8_t> bytes) {
    // Containers are constructed before setjmp and only mutated between
    // libjpeg calls, so a longjmp never interrupts their internal state.
    Image img;
    std::vector<uint8_t> row;

    jpeg_decompress_struct cinfo;
    JpegErrorContext err;
    cinfo.err = jpeg_std_error(&err.mgr);
    err.mgr.error_exit = jpeg_error_longjmp;
    err.message[0] = '\0';

    if (setjmp(err.jump)) {
        jpeg_destroy_decompress(&cinfo);
        throw DecodeError(std::string("JPEG decode failed: ") + err.message);
    }

    jpeg_create_decompress(&cinfo);
    jpeg_mem_src(&cinfo, bytes.data(), static_cast<unsigned long>(bytes.size()));
    jpeg_read_header(&cinfo, TRUE);

    // Request grayscale pass-through or RGB; the luma reduction is ours so the
    // conversion formula is identical for PNG and JPEG sources.
    if (cinfo.jpeg_color_space == JCS_GRAYSCALE)
        cinfo.out_color_space = JCS_GRAYSCALE;
    else
        cinfo.out_color_space = JCS_RGB;
    jpeg_start_decompress(&cinfo);

    const int width = static_cast<int>(cinfo.output_width);
    const int height = static_cast<int>(cinfo.output_height);
    const int channels = cinfo.output_components;
    img = Image(width, height);
    row.resize(static_cast<size_t>(width) * channels);
    JSAMPROW row_ptr = row.data();
    while (cinfo.output_scanline < cinfo.output_height) {
        const int y = static_cast<int>(cinfo.output_scanline);
        jpeg_read_scanlines(&cinfo, &row_ptr, 1);
        if (channels == 1) {
            std::memcpy(img.pixels.data() + static_cast<size_t>(y) * width, row.data(),
                        static_cast<size_t>(width));
        } else {
            for (int x = 0; x < width; ++x)
                img.at(x, y) = luma_from_rgb(row[3 * x], row[3 * x + 1], row[3 * x + 2]);
        }
    }
    jpeg_finish_decompress(&cinfo);
    jpeg_destroy_decompress(&cinfo);
    return img;
}

void png_write_to_vector(png_structp png, png_bytep data, png_size_t n) {
    auto* out = static_cast<std::vector<uint8_t>*>(png_get_io_ptr(png));
    out->insert(out->end(), data, data + n);
}

void png_flush_noop(png_structp) {}

}  // namespace

Image decode_to_grayscale(std::span<const uint8_t> encoded) {
    if (looks_like_png(encoded)) return decode_png(encoded);
    if (looks_like_jpeg(encoded)) return decode_jpeg(encoded);
    throw DecodeError("unrecognized image format (expected PNG or JPEG)");
}

Image decode_file_to_grayscale(const std::filesystem::path& path) {
    const auto bytes = read_file_bytes(path);
    try {
        return decode_to_grayscale(bytes);
    } catch (const DecodeError& e) {
        throw DecodeError(e.what(), path.string());
    }
}

std::vector<uint8_t> encode_png_gray(const Image& img) {
    if (img.width < 1 || img.height < 1) throw ArgumentError("cannot encode an empty image");
    png_structp png =
        png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, png_throw_error, png_ignore_warning);
    if (!png) throw Error("failed to initialize PNG writer");
    png_infop info = png_create_info_struct(png);
    if (!info) {
        png_destroy_write_struct(&png, nullptr);
        throw Error("failed to initialize PNG writer");
    }
    struct Guard {
        png_structp p;
        png_infop i;
        ~Guard() { png_destroy_write_struct(&p, &i); }
    } guard{png, info};

    std::vector<uint8_t> out;
    png_set_write_fn(png, &out, png_write_to_vector, png_flush_noop);
    png_set_IHDR(png, info, static_cast<png_uint_32>(img.width),
                 static_cast<png_uint_32>(img.height), 8, PNG_COLOR_TYPE_GRAY,
                 PNG_INTERLACE_NONE, PNG_COMPRESSION_TYPE_DEFAULT, PNG_FILTER_TYPE_DEFAULT);
    png_write_info(png, info);
    for (int y = 0; y < img.height; ++y)
        png_write_row(png, const_cast<png_bytep>(img.pixels.data() +
                                                 static_cast<size_t>(y) * img.width));
    png_write_end(png, nullptr);
    return out;
}

void write_png_gray(const Image& img, const std::filesystem::path& path) {
    const auto bytes = encode_png_gray(img);
    write_file_bytes(path, bytes);
}

}  // namespace demgrade
