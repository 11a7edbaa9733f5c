#include "c2f/datagen/dataset_io.hpp"

#include <zlib.h>

#include <array>
#include <bit>
#include <cstring>
#include <fstream>
#include <iterator>

namespace c2f::data {

namespace {

constexpr std::array<char, 4> kMagic = {'C', '2', 'F', 'D'};
constexpr std::uint8_t kVersion = 1;
constexpr std::size_t kHeaderSize = 4 + 1 + 1 + 4 * 5;

class Writer {
public:
    void u8(std::uint8_t v) { bytes.push_back(v); }
    void u16(std::uint16_t v)
    {
        u8(static_cast<std::uint8_t>(v & 0xFF));
        u8(static_cast<std::uint8_t>(v >> 8));
    }
    void u32(std::uint32_t v)
    {
        for (int shift = 0; shift < 32; shift += 8) {
            u8(static_cast<std::uint8_t>((v >> shift) & 0xFF));
        }
    }
    void f32(float v) { u32(std::bit_cast<std::uint32_t>(v)); }

    std::vector<std::uint8_t> bytes;
};

class Reader {
public:
    explicit Reader(const std::vector<std::uint8_t>& bytes) : bytes_(bytes) {}

    std::uint8_t u8()
    {
        need(1);
        return bytes_[pos_++];
    }
    std::uint16_t u16()
    {
        need(2);
        const auto v = static_cast<std::uint16_t>(bytes_[pos_] | (bytes_[pos_ + 1] << 8));
        pos_ += 2;
        return v;
    }
    std::uint32_t u32()
    {
        need(4);
        std::uint32_t v = 0;
        for (int i = 0; i < 4; ++i) {
            v |= static_cast<std::uint32_t>(bytes_[pos_ + static_cast<std::size_t>(i)]) << (8 * i);
        }
        pos_ += 4;
        return v;
    }
    float f32() { return std::bit_cast<float>(u32()); }
    std::size_t position() const { return pos_; }
    void need(std::size_t n) const
    {
        if (pos_ + n > bytes_.size()) {
            throw FormatError(FormatErrc::Truncated, "dataset file is truncated");
        }
    }

private:
    const std::vector<std::uint8_t>& bytes_;
    std::size_t pos_ = 0;
};

std::uint32_t crc32_of(const std::uint8_t* data, std::size_t size)
{
    uLong crc = crc32(0L, Z_NULL, 0);
    // zlib takes uInt lengths; feed large buffers in pieces.
    constexpr std::size_t kPiece = 1U << 30;
    for (std::size_t off = 0; off < size; off += kPiece) {
        const std::size_t len = std::min(kPiece, size - off);
        crc = crc32(crc, data + off, static_cast<uInt>(len));
    }
    return static_cast<std::uint32_t>(crc);
}

std::vector<std::uint8_t> read_file(const std::filesystem::path& path)
{
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw ValidationError("cannot open " + path.string());
    }
    return std::vector<std::uint8_t>(std::istreambuf_iterator<char>(in), {});
}

void write_atomically(const std::filesystem::path& path, const void* data, std::size_t size)
{
    const std::filesystem::path tmp = path.string() + ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) {
            throw RuntimeFailure("cannot write " + tmp.string());
        }
        out.write(static_cast<const char*>(data), static_cast<std::streamsize>(size));
        if (!out) {
            throw RuntimeFailure("failed writing " + tmp.string());
        }
    }
    std::filesystem::rename(tmp, path);
}

}  // namespace

std::string to_string(FormatErrc code)
{
    switch (code) {
    case FormatErrc::BadMagic: return "bad magic";
    case FormatErrc::VersionMismatch: return "version mismatch";
    case FormatErrc::ChecksumMismatch: return "checksum mismatch";
    case FormatErrc::Truncated: return "truncated";
    case FormatErrc::BadHeader: return "bad header";
    }
    return "unknown";
}

std::filesystem::path sidecar_path(const std::filesystem::path& path)
{
    std::filesystem::path p = path;
    return p.replace_extension(".meta.json");
}

void save_dataset(const Dataset& ds, const std::filesystem::path& path)
{
    check(ds);
    if (ds.num_classes > 65536) {
        throw ValidationError("dataset has more classes than 16-bit labels can hold");
    }
    Writer w;
    for (char c : kMagic) {
        w.u8(static_cast<std::uint8_t>(c));
    }
    w.u8(kVersion);
    w.u8(static_cast<std::uint8_t>(ds.type));
    w.u32(static_cast<std::uint32_t>(ds.size()));
    if (ds.type == SampleType::Image) {
        w.u32(static_cast<std::uint32_t>(ds.sample_shape.height));
        w.u32(static_cast<std::uint32_t>(ds.sample_shape.width));
        w.u32(static_cast<std::uint32_t>(ds.sample_shape.channels));
    } else {
        w.u32(static_cast<std::uint32_t>(ds.sample_shape.size()));
        w.u32(0);
        w.u32(0);
    }
    w.u32(static_cast<std::uint32_t>(ds.num_classes));
    for (std::uint16_t y : ds.labels) {
        w.u16(y);
    }
    if (ds.type == SampleType::Image) {
        w.bytes.insert(w.bytes.end(), ds.pixels.begin(), ds.pixels.end());
    } else {
        w.bytes.reserve(w.bytes.size() + ds.features.size() * 4 + 4);
        for (float v : ds.features) {
            w.f32(v);
        }
    }
    w.u32(crc32_of(w.bytes.data(), w.bytes.size()));
    write_atomically(path, w.bytes.data(), w.bytes.size());

    const nlohmann::json side{{"classNames", ds.class_names}, {"meta", ds.meta}};
    const std::string text = side.dump(1);
    write_atomically(sidecar_path(path), text.data(), text.size());
}

Dataset load_dataset(const std::filesystem::path& path)
{
    const std::vector<std::uint8_t> bytes = read_file(path);
    if (bytes.size() < 4 || std::memcmp(bytes.data(), kMagic.data(), 4) != 0) {
        throw FormatError(FormatErrc::BadMagic, "bad magic in " + path.string());
    }
    if (bytes.size() < 5 || bytes[4] != kVersion) {
        throw FormatError(FormatErrc::VersionMismatch, "unsupported dataset version in " + path.string());
    }
    if (bytes.size() < kHeaderSize + 4) {
        throw FormatError(FormatErrc::Truncated, "dataset file is truncated: " + path.string());
    }
    const std::size_t body = bytes.size() - 4;
    std::uint32_t stored = 0;
    for (int i = 0; i < 4; ++i) {
        stored |= static_cast<std::uint32_t>(bytes[body + static_cast<std::size_t>(i)]) << (8 * i);
    }
    if (crc32_of(bytes.data(), body) != stored) {
        throw FormatError(FormatErrc::ChecksumMismatch, "checksum mismatch in " + path.string());
    }

    Reader r(bytes);
    for (int i = 0; i < 5; ++i) {
        r.u8();
    }
    const std::uint8_t type = r.u8();
    if (type > 1) {
        throw FormatError(FormatErrc::BadHeader, "unknown sample type in " + path.string());
    }
    Dataset ds;
    ds.type = static_cast<SampleType>(type);
    const std::size_t n = r.u32();
    const std::size_t a = r.u32();
    const std::size_t b = r.u32();
    const std::size_t c = r.u32();
    ds.num_classes = r.u32();
    ds.sample_shape = ds.type == SampleType::Image ? net::Shape3{a, b, c} : net::Shape3{1, 1, a};
    const std::size_t per = ds.sample_shape.size();
    const std::size_t value_bytes = ds.type == SampleType::Image ? 1 : 4;
    if (kHeaderSize + 2 * n + n * per * value_bytes != body) {
        throw FormatError(FormatErrc::Truncated, "dataset payload size mismatch in " + path.string());
    }
    ds.labels.resize(n);
    for (auto& y : ds.labels) {
        y = r.u16();
    }
    if (ds.type == SampleType::Image) {
        const auto first = bytes.begin() + static_cast<std::ptrdiff_t>(r.position());
        ds.pixels.assign(first, first + static_cast<std::ptrdiff_t>(n * per));
    } else {
        ds.features.resize(n * per);
        for (float& v : ds.features) {
            v = r.f32();
        }
    }

    const std::filesystem::path side = sidecar_path(path);
    if (std::filesystem::exists(side)) {
        try {
            std::ifstream in(side);
            const nlohmann::json doc = nlohmann::json::parse(in);
            ds.class_names = doc.value("classNames", std::vector<std::string>{});
            ds.meta = doc.value("meta", nlohmann::json::object());
        } catch (const nlohmann::json::exception& e) {
            throw ValidationError("malformed dataset sidecar " + side.string() + ": " + e.what());
        }
    }
    check(ds);
    return ds;
}

}  // namespace c2f::data
