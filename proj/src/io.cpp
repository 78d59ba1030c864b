#include "forge/io.hpp"

#include <jpeglib.h>
#include <png.h>

#include <algorithm>
#include <cmath>
#include <csetjmp>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "forge/errors.hpp"

namespace forge::io {

using nlohmann::json;

namespace {

std::uint8_t quantize8(float v) {
    const float scaled = std::clamp(v, 0.0f, 1.0f) * 255.0f;
    return static_cast<std::uint8_t>(std::lround(scaled));
}

// Interleaved 8-bit RGB rows from a CHW float image.
std::vector<std::uint8_t> to_rgb8(const Image& img) {
    std::vector<std::uint8_t> buf(static_cast<std::size_t>(3) * img.height * img.width);
    std::size_t i = 0;
    for (int y = 0; y < img.height; ++y)
        for (int x = 0; x < img.width; ++x)
            for (int c = 0; c < 3; ++c) buf[i++] = quantize8(img.at(c, y, x));
    return buf;
}

Image from_rgb8(const std::uint8_t* buf, int h, int w) {
    Image img(h, w);
    std::size_t i = 0;
    for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x)
            for (int c = 0; c < 3; ++c) img.at(c, y, x) = static_cast<float>(buf[i++]) / 255.0f;
    return img;
}

struct FileCloser {
    void operator()(std::FILE* f) const {
        if (f) std::fclose(f);
    }
};
using FilePtr = std::unique_ptr<std::FILE, FileCloser>;

}  // namespace

Image read_png(const std::filesystem::path& path) {
    FilePtr fp(std::fopen(path.c_str(), "rb"));
    if (!fp) throw IoError("cannot open " + path.string());

    png_structp png = png_create_read_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
    if (!png) throw IoError("png_create_read_struct failed");
    png_infop info = png_create_info_struct(png);
    if (!info) {
        png_destroy_read_struct(&png, nullptr, nullptr);
        throw IoError("png_create_info_struct failed");
    }
    if (setjmp(png_jmpbuf(png))) {
        png_destroy_read_struct(&png, &info, nullptr);
        throw IoError("failed to decode PNG: " + path.string());
    }

    png_init_io(png, fp.get());
    png_read_info(png, info);

    const int w = static_cast<int>(png_get_image_width(png, info));
    const int h = static_cast<int>(png_get_image_height(png, info));
    const png_byte color = png_get_color_type(png, info);
    const png_byte depth = png_get_bit_depth(png, info);

    // Normalize anything to 8-bit RGB.
    if (depth == 16) png_set_strip_16(png);
    if (color == PNG_COLOR_TYPE_PALETTE) png_set_palette_to_rgb(png);
    if (color == PNG_COLOR_TYPE_GRAY && depth < 8) png_set_expand_gray_1_2_4_to_8(png);
    if (png_get_valid(png, info, PNG_INFO_tRNS)) png_set_tRNS_to_alpha(png);
    if (color == PNG_COLOR_TYPE_GRAY || color == PNG_COLOR_TYPE_GRAY_ALPHA) png_set_gray_to_rgb(png);
    if (color & PNG_COLOR_MASK_ALPHA) png_set_strip_alpha(png);
    png_read_update_info(png, info);

    std::vector<std::uint8_t> buf(static_cast<std::size_t>(3) * h * w);
    std::vector<png_bytep> rows(h);
    for (int y = 0; y < h; ++y) rows[y] = buf.data() + static_cast<std::size_t>(y) * w * 3;
    png_read_image(png, rows.data());
    png_read_end(png, nullptr);
    png_destroy_read_struct(&png, &info, nullptr);

    return from_rgb8(buf.data(), h, w);
}

void write_png(const std::filesystem::path& path, const Image& img) {
    FilePtr fp(std::fopen(path.c_str(), "wb"));
    if (!fp) throw IoError("cannot open for write " + path.string());

    png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
    if (!png) throw IoError("png_create_write_struct failed");
    png_infop info = png_create_info_struct(png);
    if (!info) {
        png_destroy_write_struct(&png, nullptr);
        throw IoError("png_create_info_struct failed");
    }
    if (setjmp(png_jmpbuf(png))) {
        png_destroy_write_struct(&png, &info);
        throw IoError("failed to encode PNG: " + path.string());
    }

    png_init_io(png, fp.get());
    png_set_IHDR(png, info, img.width, img.height, 8, PNG_COLOR_TYPE_RGB, PNG_INTERLACE_NONE,
                 PNG_COMPRESSION_TYPE_DEFAULT, PNG_FILTER_TYPE_DEFAULT);
    png_write_info(png, info);

    auto buf = to_rgb8(img);
    for (int y = 0; y < img.height; ++y)
        png_write_row(png, buf.data() + static_cast<std::size_t>(y) * img.width * 3);
    png_write_end(png, nullptr);
    png_destroy_write_struct(&png, &info);
}

namespace {

struct JpegErrorMgr {
    jpeg_error_mgr pub;
    std::jmp_buf jump;
};

void jpeg_error_exit(j_common_ptr cinfo) {
    auto* err = reinterpret_cast<JpegErrorMgr*>(cinfo->err);
    std::longjmp(err->jump, 1);
}

}  // namespace

Image jpeg_roundtrip(const Image& img, int quality) {
    if (quality < 1 || quality > 100) throw ArgumentError("jpeg quality must be in [1,100]");

    auto rgb = to_rgb8(img);

    // Encode to memory.
    unsigned char* jpeg_buf = nullptr;
    unsigned long jpeg_size = 0;
    {
        jpeg_compress_struct cinfo;
        JpegErrorMgr jerr;
        cinfo.err = jpeg_std_error(&jerr.pub);
        jerr.pub.error_exit = jpeg_error_exit;
        if (setjmp(jerr.jump)) {
            jpeg_destroy_compress(&cinfo);
            if (jpeg_buf) std::free(jpeg_buf);
            throw IoError("JPEG encode failed");
        }
        jpeg_create_compress(&cinfo);
        jpeg_mem_dest(&cinfo, &jpeg_buf, &jpeg_size);
        cinfo.image_width = static_cast<JDIMENSION>(img.width);
        cinfo.image_height = static_cast<JDIMENSION>(img.height);
        cinfo.input_components = 3;
        cinfo.in_color_space = JCS_RGB;
        jpeg_set_defaults(&cinfo);
        jpeg_set_quality(&cinfo, quality, TRUE);
        // 4:4:4; chroma subsampling is brutal on the small images this
        // toolkit works with
        for (int c = 0; c < cinfo.num_components; ++c) {
            cinfo.comp_info[c].h_samp_factor = 1;
            cinfo.comp_info[c].v_samp_factor = 1;
        }
        jpeg_start_compress(&cinfo, TRUE);
        while (cinfo.next_scanline < cinfo.image_height) {
            JSAMPROW row = rgb.data() + static_cast<std::size_t>(cinfo.next_scanline) * img.width * 3;
            jpeg_write_scanlines(&cinfo, &row, 1);
        }
        jpeg_finish_compress(&cinfo);
        jpeg_destroy_compress(&cinfo);
    }

    // Decode back.
    Image out;
    {
        jpeg_decompress_struct dinfo;
        JpegErrorMgr jerr;
        dinfo.err = jpeg_std_error(&jerr.pub);
        jerr.pub.error_exit = jpeg_error_exit;
        if (setjmp(jerr.jump)) {
            jpeg_destroy_decompress(&dinfo);
            std::free(jpeg_buf);
            throw IoError("JPEG decode failed");
        }
        jpeg_create_decompress(&dinfo);
        jpeg_mem_src(&dinfo, jpeg_buf, jpeg_size);
        jpeg_read_header(&dinfo, TRUE);
        dinfo.out_color_space = JCS_RGB;
        jpeg_start_decompress(&dinfo);
        const int w = static_cast<int>(dinfo.output_width);
        const int h = static_cast<int>(dinfo.output_height);
        std::vector<std::uint8_t> buf(static_cast<std::size_t>(3) * h * w);
        while (dinfo.output_scanline < dinfo.output_height) {
            JSAMPROW row = buf.data() + static_cast<std::size_t>(dinfo.output_scanline) * w * 3;
            jpeg_read_scanlines(&dinfo, &row, 1);
        }
        jpeg_finish_decompress(&dinfo);
        jpeg_destroy_decompress(&dinfo);
        out = from_rgb8(buf.data(), h, w);
    }
    std::free(jpeg_buf);
    return out;
}

void write_f32(const std::filesystem::path& path, const Image& img) {
    write_f32_raw(path, img.data);
    json sidecar = {{"shape", {3, img.height, img.width}}, {"dtype", "float32"}, {"order", "chw"}};
    write_text_file(path.string() + ".json", sidecar.dump(2) + "\n");
}

Image read_f32(const std::filesystem::path& path) {
    const json sidecar = json::parse(read_text_file(path.string() + ".json"));
    const auto shape = sidecar.at("shape");
    if (shape.size() != 3 || shape[0].get<int>() != 3)
        throw IoError("unsupported tensor shape in " + path.string() + ".json");
    Image img(shape[1].get<int>(), shape[2].get<int>());
    auto data = read_f32_raw(path);
    if (data.size() != img.data.size()) throw IoError("tensor size mismatch in " + path.string());
    img.data = std::move(data);
    return img;
}

void write_f32_raw(const std::filesystem::path& path, const std::vector<float>& data) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot open for write " + path.string());
    static_assert(sizeof(float) == 4);
    out.write(reinterpret_cast<const char*>(data.data()),
              static_cast<std::streamsize>(data.size() * sizeof(float)));
    if (!out) throw IoError("short write to " + path.string());
}

std::vector<float> read_f32_raw(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary | std::ios::ate);
    if (!in) throw IoError("cannot open " + path.string());
    const auto bytes = static_cast<std::size_t>(in.tellg());
    if (bytes % sizeof(float) != 0) throw IoError("not a float32 file: " + path.string());
    std::vector<float> data(bytes / sizeof(float));
    in.seekg(0);
    in.read(reinterpret_cast<char*>(data.data()), static_cast<std::streamsize>(bytes));
    if (!in) throw IoError("short read from " + path.string());
    return data;
}

void write_dataset(const std::filesystem::path& jsonl_path, const QADataset& ds) {
    ds.validate();
    std::ostringstream lines;
    std::vector<int> train_idx, test_idx;
    int i = 0;
    for (const auto& p : ds.train) {
        lines << json{{"prompt", p.prompt}, {"target_answer", p.target_answer}, {"passed_filter", p.passed_filter}}
                     .dump()
              << "\n";
        train_idx.push_back(i++);
    }
    for (const auto& p : ds.test) {
        lines << json{{"prompt", p.prompt}, {"target_answer", p.target_answer}, {"passed_filter", p.passed_filter}}
                     .dump()
              << "\n";
        test_idx.push_back(i++);
    }
    write_text_file(jsonl_path, lines.str());

    json sidecar = {{"image_ref", ds.image_ref},
                    {"objective", objective_id(ds.objective)},
                    {"train_indices", train_idx},
                    {"test_indices", test_idx},
                    {"filter_exhausted", ds.filter_exhausted}};
    write_text_file(jsonl_path.string() + ".meta.json", sidecar.dump(2) + "\n");
}

QADataset read_dataset(const std::filesystem::path& jsonl_path) {
    const json sidecar = json::parse(read_text_file(jsonl_path.string() + ".meta.json"));

    std::vector<QAPair> pairs;
    std::istringstream in(read_text_file(jsonl_path));
    std::string line;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        const json j = json::parse(line);
        pairs.push_back({j.at("prompt").get<std::string>(), j.at("target_answer").get<std::string>(),
                         j.at("passed_filter").get<bool>()});
    }

    QADataset ds{sidecar.at("image_ref").get<std::string>(),
                 parse_objective(sidecar.at("objective").get<std::string>()),
                 {},
                 {},
                 sidecar.value("filter_exhausted", false)};
    for (int i : sidecar.at("train_indices").get<std::vector<int>>()) ds.train.push_back(pairs.at(i));
    for (int i : sidecar.at("test_indices").get<std::vector<int>>()) ds.test.push_back(pairs.at(i));
    ds.validate();
    return ds;
}

void write_artifact(const std::filesystem::path& dir, const AttackArtifact& artifact) {
    artifact.validate();
    std::filesystem::create_directories(dir);
    write_png(dir / "base.png", artifact.base_image.pixels);
    write_png(dir / "perturbed.png", artifact.perturbed_pixels);
    write_f32(dir / "perturbed.f32", artifact.perturbed_pixels);
    write_f32(dir / "base.f32", artifact.base_image.pixels);

    std::ostringstream csv;
    csv.precision(17);
    csv << "step,loss\n";
    for (std::size_t i = 0; i < artifact.loss_trace.size(); ++i) {
        const auto step = std::min<std::size_t>(i * 10, static_cast<std::size_t>(artifact.config.iterations));
        csv << step << "," << artifact.loss_trace[i] << "\n";
    }
    write_text_file(dir / "loss_trace.csv", csv.str());

    json manifest = {
        {"model_id", artifact.model_id},
        {"kind", artifact.kind == ArtifactKind::MetaInstruction ? "meta_instruction" : "fixed_target"},
        {"label", artifact.base_image.label},
        {"source_id", artifact.base_image.source_id},
        {"shape", {3, artifact.base_image.pixels.height, artifact.base_image.pixels.width}},
        {"config",
         {{"norm", norm_name(artifact.config.budget.norm)},
          {"epsilon", artifact.config.budget.epsilon},
          {"iterations", artifact.config.iterations},
          {"step_size", artifact.config.step_size},
          {"batch_size", artifact.config.batch_size},
          {"seed", artifact.config.seed}}},
        {"forms", {{"png", "perturbed.png"}, {"float32", "perturbed.f32"}}},
    };
    if (artifact.objective) manifest["objective"] = objective_id(*artifact.objective);
    if (artifact.config.adaptive_jpeg) manifest["config"]["adaptive_jpeg"] = *artifact.config.adaptive_jpeg;
    write_text_file(dir / "manifest.json", manifest.dump(2) + "\n");
}

AttackArtifact read_artifact(const std::filesystem::path& dir) {
    const json manifest = json::parse(read_text_file(dir / "manifest.json"));

    AttackArtifact a;
    a.model_id = manifest.at("model_id").get<std::string>();
    a.kind = manifest.at("kind").get<std::string>() == "fixed_target" ? ArtifactKind::FixedTarget
                                                                      : ArtifactKind::MetaInstruction;
    if (manifest.contains("objective"))
        a.objective = parse_objective(manifest.at("objective").get<std::string>());
    a.base_image.label = manifest.at("label").get<std::string>();
    a.base_image.source_id = manifest.at("source_id").get<std::string>();
    a.base_image.pixels = read_f32(dir / "base.f32");
    a.perturbed_pixels = read_f32(dir / "perturbed.f32");

    const auto& cfg = manifest.at("config");
    a.config.budget.norm = parse_norm(cfg.at("norm").get<std::string>());
    a.config.budget.epsilon = cfg.at("epsilon").get<double>();
    a.config.iterations = cfg.at("iterations").get<int>();
    a.config.step_size = cfg.at("step_size").get<double>();
    a.config.batch_size = cfg.at("batch_size").get<int>();
    a.config.seed = cfg.at("seed").get<std::int64_t>();
    if (cfg.contains("adaptive_jpeg")) a.config.adaptive_jpeg = cfg.at("adaptive_jpeg").get<int>();

    std::istringstream csv(read_text_file(dir / "loss_trace.csv"));
    std::string line;
    std::getline(csv, line);  // header
    while (std::getline(csv, line)) {
        const auto comma = line.find(',');
        if (comma == std::string::npos) continue;
        a.loss_trace.push_back(std::stod(line.substr(comma + 1)));
    }
    a.validate();
    return a;
}

std::string read_text_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open " + path.string());
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

void write_text_file(const std::filesystem::path& path, const std::string& text) {
    if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot open for write " + path.string());
    out << text;
    if (!out) throw IoError("short write to " + path.string());
}

}  // namespace forge::io
