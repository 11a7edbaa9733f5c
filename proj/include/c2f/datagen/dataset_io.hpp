#pragma once

#include <filesystem>
#include <string>

#include "c2f/datagen/dataset.hpp"
#include "c2f/error.hpp"

namespace c2f::data {

enum class FormatErrc { BadMagic, VersionMismatch, ChecksumMismatch, Truncated, BadHeader };

std::string to_string(FormatErrc code);

class FormatError : public ValidationError {
public:
    FormatError(FormatErrc code, const std::string& what)
        : ValidationError(what), code_(code)
    {
    }
    FormatErrc code() const noexcept { return code_; }

private:
    FormatErrc code_;
};

// Little-endian binary layout:
//   "C2FD" | version u8 (1) | type u8 (0 image, 1 vector) | N u32 |
//   H W C u32 (vectors: dim 0 0) | K u32 | labels N x u16 | samples | CRC32 u32
// Class names and meta go to a JSON sidecar next to the file.
void save_dataset(const Dataset& ds, const std::filesystem::path& path);
Dataset load_dataset(const std::filesystem::path& path);
std::filesystem::path sidecar_path(const std::filesystem::path& path);

enum class CifarVariant { Cifar10, Cifar100Fine, Cifar100Coarse };

CifarVariant cifar_variant_from_string(const std::string& name);
std::size_t cifar_class_count(CifarVariant variant);

// One CIFAR binary batch file (3073-byte records for CIFAR-10, 3074 for CIFAR-100).
Dataset load_cifar_binary(const std::filesystem::path& file, CifarVariant variant);
// The canonical train (data_batch_1..5 / train.bin) or test split of an extracted archive.
Dataset load_cifar_split(const std::filesystem::path& dir, CifarVariant variant, bool train);

}  // namespace c2f::data
