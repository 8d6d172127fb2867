#pragma once

#include <zlib.h>

#include <algorithm>
#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

#include "dc/error.hpp"
#include "dc/matrix.hpp"
#include "dc/rng.hpp"

namespace dc {

struct LabeledData {
    Matrix x;                 // one flattened image per row, scaled to [0, 1]
    std::vector<int> labels;  // class per row
};

struct Partition {
    std::vector<LabeledData> users;
    LabeledData holdout;
};

namespace detail {

// Minimal RAII wrapper; gzopen transparently reads both gzip and raw files.
class GzFile {
public:
    GzFile(const std::string& path, const char* mode) : path_(path), f_(gzopen(path.c_str(), mode)) {
        if (!f_) throw InputError("load_idx: cannot open " + path);
    }
    ~GzFile() {
        if (f_) gzclose(f_);
    }
    GzFile(const GzFile&) = delete;
    GzFile& operator=(const GzFile&) = delete;

    void read(void* buf, std::size_t len) {
        if (gzread(f_, buf, static_cast<unsigned>(len)) != static_cast<int>(len))
            throw InputError("load_idx: " + path_ + " is truncated");
    }

    std::uint32_t read_be32() {
        unsigned char b[4];
        read(b, 4);
        return (static_cast<std::uint32_t>(b[0]) << 24) | (static_cast<std::uint32_t>(b[1]) << 16) |
               (static_cast<std::uint32_t>(b[2]) << 8) | static_cast<std::uint32_t>(b[3]);
    }

private:
    std::string path_;
    gzFile f_;
};

}  // namespace detail

// Reads an images/labels file pair in the big-endian idx format (raw or
// gzip-compressed). Pixels are scaled by 1/255 and flattened row-major.
inline LabeledData load_idx(const std::string& images_path, const std::string& labels_path) {
    detail::GzFile images(images_path, "rb");
    const std::uint32_t image_magic = images.read_be32();
    if (image_magic != 0x00000803u)
        throw InputError("load_idx: " + images_path + " has magic " + std::to_string(image_magic) +
                         ", expected 2051 (idx3 images)");
    const std::uint32_t count = images.read_be32();
    const std::uint32_t rows = images.read_be32();
    const std::uint32_t cols = images.read_be32();
    if (count == 0 || rows == 0 || cols == 0)
        throw InputError("load_idx: " + images_path + " declares an empty dimension");

    detail::GzFile labels(labels_path, "rb");
    const std::uint32_t label_magic = labels.read_be32();
    if (label_magic != 0x00000801u)
        throw InputError("load_idx: " + labels_path + " has magic " + std::to_string(label_magic) +
                         ", expected 2049 (idx1 labels)");
    const std::uint32_t label_count = labels.read_be32();
    if (label_count != count)
        throw InputError("load_idx: " + images_path + " has " + std::to_string(count) +
                         " images but " + labels_path + " has " + std::to_string(label_count) +
                         " labels");

    LabeledData data;
    const std::size_t dim = static_cast<std::size_t>(rows) * cols;
    data.x = Matrix(count, dim);
    std::vector<unsigned char> buf(dim);
    for (std::size_t i = 0; i < count; ++i) {
        images.read(buf.data(), dim);
        double* out = data.x.row(i).data();
        for (std::size_t j = 0; j < dim; ++j) out[j] = static_cast<double>(buf[j]) / 255.0;
    }

    std::vector<unsigned char> raw(count);
    labels.read(raw.data(), count);
    data.labels.assign(raw.begin(), raw.end());
    return data;
}

// Draws a disjoint holdout set plus num_users equal-size user datasets from
// a seeded shuffle of the rows.
inline Partition make_partition(const LabeledData& data, std::size_t num_users,
                                std::size_t samples_per_user, std::uint64_t seed,
                                std::size_t holdout_size = 1000) {
    if (num_users == 0) throw InputError("make_partition: num_users must be positive");
    if (samples_per_user == 0)
        throw InputError("make_partition: samples_per_user must be positive");
    const std::size_t need = num_users * samples_per_user + holdout_size;
    if (need > data.x.rows())
        throw InputError("make_partition: need " + std::to_string(need) + " samples (" +
                         std::to_string(num_users) + " users x " +
                         std::to_string(samples_per_user) + " + " + std::to_string(holdout_size) +
                         " holdout), dataset has " + std::to_string(data.x.rows()));
    if (data.labels.size() != data.x.rows())
        throw InputError("make_partition: " + std::to_string(data.x.rows()) + " rows but " +
                         std::to_string(data.labels.size()) + " labels");

    std::vector<std::size_t> idx(data.x.rows());
    for (std::size_t i = 0; i < idx.size(); ++i) idx[i] = i;
    Rng rng(seed);
    rng.shuffle(idx);

    auto take = [&](std::size_t begin, std::size_t count) {
        LabeledData part;
        part.x = Matrix(count, data.x.cols());
        part.labels.resize(count);
        for (std::size_t i = 0; i < count; ++i) {
            const std::size_t src = idx[begin + i];
            std::copy(data.x.row(src).begin(), data.x.row(src).end(), part.x.row(i).begin());
            part.labels[i] = data.labels[src];
        }
        return part;
    };

    Partition part;
    part.holdout = take(0, holdout_size);
    for (std::size_t u = 0; u < num_users; ++u)
        part.users.push_back(take(holdout_size + u * samples_per_user, samples_per_user));
    return part;
}

}  // namespace dc
