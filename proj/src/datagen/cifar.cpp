#include <array>
#include <fstream>
#include <iterator>

#include "c2f/datagen/dataset_io.hpp"

namespace c2f::data {

namespace {

constexpr std::size_t kSide = 32;
constexpr std::size_t kPlane = kSide * kSide;
constexpr std::size_t kPixels = 3 * kPlane;

constexpr std::array<const char*, 10> kCifar10Names = {
    "airplane", "automobile", "bird", "cat", "deer", "dog", "frog", "horse", "ship", "truck"};

std::vector<std::string> read_names(const std::filesystem::path& file)
{
    std::vector<std::string> names;
    std::ifstream in(file);
    std::string line;
    while (std::getline(in, line)) {
        while (!line.empty() && (line.back() == '\r' || line.back() == ' ')) {
            line.pop_back();
        }
        if (!line.empty()) {
            names.push_back(line);
        }
    }
    return names;
}

std::vector<std::string> class_names_for(const std::filesystem::path& dir, CifarVariant variant)
{
    const std::size_t k = cifar_class_count(variant);
    std::filesystem::path file;
    switch (variant) {
    case CifarVariant::Cifar10: file = dir / "batches.meta.txt"; break;
    case CifarVariant::Cifar100Fine: file = dir / "fine_label_names.txt"; break;
    case CifarVariant::Cifar100Coarse: file = dir / "coarse_label_names.txt"; break;
    }
    if (std::filesystem::exists(file)) {
        auto names = read_names(file);
        if (names.size() == k) {
            return names;
        }
    }
    if (variant == CifarVariant::Cifar10) {
        return {kCifar10Names.begin(), kCifar10Names.end()};
    }
    std::vector<std::string> names;
    for (std::size_t i = 0; i < k; ++i) {
        names.push_back(std::to_string(i));
    }
    return names;
}

}  // namespace

CifarVariant cifar_variant_from_string(const std::string& name)
{
    if (name == "cifar10") {
        return CifarVariant::Cifar10;
    }
    if (name == "cifar100-fine") {
        return CifarVariant::Cifar100Fine;
    }
    if (name == "cifar100-coarse") {
        return CifarVariant::Cifar100Coarse;
    }
    throw ValidationError("unknown CIFAR variant '" + name + "'");
}

std::size_t cifar_class_count(CifarVariant variant)
{
    switch (variant) {
    case CifarVariant::Cifar10: return 10;
    case CifarVariant::Cifar100Fine: return 100;
    case CifarVariant::Cifar100Coarse: return 20;
    }
    return 0;
}

Dataset load_cifar_binary(const std::filesystem::path& file, CifarVariant variant)
{
    std::ifstream in(file, std::ios::binary);
    if (!in) {
        throw ValidationError("cannot open CIFAR file " + file.string());
    }
    const std::vector<std::uint8_t> bytes(std::istreambuf_iterator<char>(in), {});
    const std::size_t label_bytes = variant == CifarVariant::Cifar10 ? 1 : 2;
    const std::size_t record = label_bytes + kPixels;
    if (bytes.size() % record != 0) {
        throw FormatError(FormatErrc::Truncated,
                          "CIFAR file " + file.string() + " is not a whole number of " +
                              std::to_string(record) + "-byte records");
    }
    const std::size_t n = bytes.size() / record;
    const std::size_t k = cifar_class_count(variant);

    Dataset ds;
    ds.type = SampleType::Image;
    ds.sample_shape = net::Shape3{kSide, kSide, 3};
    ds.num_classes = k;
    ds.class_names = class_names_for(file.parent_path(), variant);
    ds.labels.resize(n);
    ds.pixels.resize(n * kPixels);
    for (std::size_t i = 0; i < n; ++i) {
        const std::uint8_t* rec = bytes.data() + i * record;
        // CIFAR-100 records carry (coarse, fine).
        const std::uint8_t label = variant == CifarVariant::Cifar100Fine ? rec[1] : rec[0];
        if (label >= k) {
            throw FormatError(FormatErrc::BadHeader, "CIFAR label out of range in " + file.string());
        }
        ds.labels[i] = label;
        const std::uint8_t* planes = rec + label_bytes;
        std::uint8_t* dst = ds.pixels.data() + i * kPixels;
        for (std::size_t c = 0; c < 3; ++c) {
            for (std::size_t p = 0; p < kPlane; ++p) {
                dst[p * 3 + c] = planes[c * kPlane + p];
            }
        }
    }
    return ds;
}

Dataset load_cifar_split(const std::filesystem::path& dir, CifarVariant variant, bool train)
{
    std::vector<std::filesystem::path> files;
    if (variant == CifarVariant::Cifar10) {
        if (train) {
            for (int b = 1; b <= 5; ++b) {
                files.push_back(dir / ("data_batch_" + std::to_string(b) + ".bin"));
            }
        } else {
            files.push_back(dir / "test_batch.bin");
        }
    } else {
        files.push_back(dir / (train ? "train.bin" : "test.bin"));
    }
    Dataset all;
    for (const auto& f : files) {
        Dataset part = load_cifar_binary(f, variant);
        if (all.labels.empty() && all.pixels.empty()) {
            all = std::move(part);
            continue;
        }
        all.labels.insert(all.labels.end(), part.labels.begin(), part.labels.end());
        all.pixels.insert(all.pixels.end(), part.pixels.begin(), part.pixels.end());
    }
    return all;
}

}  // namespace c2f::data
