// The only translation unit that touches OpenCV; everything else works on
// the plain structs from core.

#if defined(__GNUC__)
#pragma GCC diagnostic push
#pragma GCC diagnostic ignored "-Wdeprecated-enum-enum-conversion"
#endif
#include <opencv2/imgcodecs.hpp>
#include <opencv2/imgproc.hpp>
#if defined(__GNUC__)
#pragma GCC diagnostic pop
#endif

#include <algorithm>
#include <cmath>

#include "semiseg/core/error.hpp"
#include "semiseg/dataio/image_io.hpp"

namespace semiseg {

namespace {

void ensure_parent(const std::filesystem::path& path) {
    const auto parent = path.parent_path();
    if (!parent.empty()) std::filesystem::create_directories(parent);
}

} // namespace

Image read_image_png(const std::filesystem::path& path) {
    cv::Mat bgr = cv::imread(path.string(), cv::IMREAD_COLOR);
    if (bgr.empty()) throw DataError("cannot read image: " + path.string());
    Image image(bgr.rows, bgr.cols);
    for (int r = 0; r < bgr.rows; ++r) {
        const cv::Vec3b* row = bgr.ptr<cv::Vec3b>(r);
        for (int c = 0; c < bgr.cols; ++c) {
            float* px = image.at(r, c);
            px[0] = row[c][2] / 255.0f;
            px[1] = row[c][1] / 255.0f;
            px[2] = row[c][0] / 255.0f;
        }
    }
    return image;
}

void write_image_png(const std::filesystem::path& path, const Image& image) {
    validate_image(image);
    cv::Mat bgr(image.height, image.width, CV_8UC3);
    for (int r = 0; r < image.height; ++r) {
        cv::Vec3b* row = bgr.ptr<cv::Vec3b>(r);
        for (int c = 0; c < image.width; ++c) {
            const float* px = image.at(r, c);
            for (int ch = 0; ch < 3; ++ch) {
                const float v = std::clamp(px[ch], 0.0f, 1.0f);
                row[c][2 - ch] = static_cast<unsigned char>(std::lround(v * 255.0f));
            }
        }
    }
    ensure_parent(path);
    if (!cv::imwrite(path.string(), bgr)) {
        throw DataError("cannot write image: " + path.string());
    }
}

LabelMap read_label_png(const std::filesystem::path& path) {
    cv::Mat mask = cv::imread(path.string(), cv::IMREAD_GRAYSCALE);
    if (mask.empty()) throw DataError("cannot read label mask: " + path.string());
    LabelMap map;
    map.height = mask.rows;
    map.width = mask.cols;
    map.ids.resize(static_cast<std::size_t>(mask.rows) * mask.cols);
    for (int r = 0; r < mask.rows; ++r) {
        const unsigned char* row = mask.ptr<unsigned char>(r);
        for (int c = 0; c < mask.cols; ++c) map.at(r, c) = row[c];
    }
    return map;
}

void write_label_png(const std::filesystem::path& path, const LabelMap& map) {
    if (map.height <= 0 || map.width <= 0) throw DataError("write_label_png: empty map");
    cv::Mat mask(map.height, map.width, CV_8UC1);
    for (int r = 0; r < map.height; ++r) {
        unsigned char* row = mask.ptr<unsigned char>(r);
        for (int c = 0; c < map.width; ++c) {
            const ClassId id = map.at(r, c);
            if (id < 0 || id > 255) {
                throw DataError("label id " + std::to_string(id) +
                                " does not fit the 8-bit mask format");
            }
            row[c] = static_cast<unsigned char>(id);
        }
    }
    ensure_parent(path);
    if (!cv::imwrite(path.string(), mask)) {
        throw DataError("cannot write label mask: " + path.string());
    }
}

} // namespace semiseg
