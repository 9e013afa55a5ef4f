#ifndef PCS_CHECKPOINT_HPP
#define PCS_CHECKPOINT_HPP

// Checkpoint file layout (all integers little-endian):
//
//   8 bytes   magic "PCSCKPT\0"
//   u32       format version (currently 1)
//   u32       metadata length L
//   L bytes   UTF-8 JSON metadata (network config, training state, ...)
//   u32       tensor count T
//   T times:  u32 name length, name bytes, u32 rows, u32 cols,
//             rows*cols IEEE-754 binary64 values, row-major
//
// Tensors keep their insertion order; load(save(c)) == c bit for bit.

#include <cstdint>
#include <cstring>
#include <filesystem>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include <json.hpp>

#include "pcs/autodiff.hpp"
#include "pcs/error.hpp"
#include "pcs/io.hpp"

namespace pcs {

inline constexpr std::uint32_t kCheckpointVersion = 1;

struct Checkpoint {
    nlohmann::json metadata = nlohmann::json::object();
    std::vector<std::pair<std::string, Tensor>> tensors;

    const Tensor& tensor(std::string_view name) const {
        for (const auto& [n, t] : tensors)
            if (n == name) return t;
        fail(ErrorKind::data, "missing-tensor", "checkpoint has no tensor '" + std::string(name) + "'");
    }

    bool has_tensor(std::string_view name) const {
        for (const auto& [n, t] : tensors)
            if (n == name) return true;
        return false;
    }

    friend bool operator==(const Checkpoint&, const Checkpoint&) = default;
};

inline std::string encode_checkpoint(const Checkpoint& ckpt) {
    using io_detail::store_le;
    std::string out("PCSCKPT\0", 8);
    store_le<std::uint32_t>(out, kCheckpointVersion);
    const std::string meta = ckpt.metadata.dump();
    store_le<std::uint32_t>(out, static_cast<std::uint32_t>(meta.size()));
    out += meta;
    store_le<std::uint32_t>(out, static_cast<std::uint32_t>(ckpt.tensors.size()));
    for (const auto& [name, t] : ckpt.tensors) {
        store_le<std::uint32_t>(out, static_cast<std::uint32_t>(name.size()));
        out += name;
        store_le<std::uint32_t>(out, static_cast<std::uint32_t>(t.rows));
        store_le<std::uint32_t>(out, static_cast<std::uint32_t>(t.cols));
        const std::size_t bytes = t.data.size() * sizeof(double);
        const std::size_t at = out.size();
        out.resize(at + bytes);
        if (bytes) std::memcpy(out.data() + at, t.data.data(), bytes);
    }
    return out;
}

inline Checkpoint decode_checkpoint(std::string_view bytes) {
    std::size_t pos = 0;
    auto need = [&](std::size_t n) {
        if (n > bytes.size() - pos) fail(ErrorKind::data, "truncated", "checkpoint ends early");
    };
    auto u32 = [&]() {
        need(4);
        const auto v = io_detail::load_le<std::uint32_t>(bytes.data() + pos);
        pos += 4;
        return v;
    };
    need(8);
    if (bytes.substr(0, 8) != std::string_view("PCSCKPT\0", 8)) fail(ErrorKind::data, "bad-magic", "not a checkpoint file");
    pos = 8;
    const auto version = u32();
    if (version != kCheckpointVersion)
        fail(ErrorKind::data, "bad-version", "unsupported checkpoint version " + std::to_string(version));
    Checkpoint ckpt;
    const auto meta_len = u32();
    need(meta_len);
    try {
        ckpt.metadata = nlohmann::json::parse(bytes.substr(pos, meta_len));
    } catch (const nlohmann::json::exception& e) {
        fail(ErrorKind::data, "bad-metadata", e.what());
    }
    pos += meta_len;
    const auto count = u32();
    for (std::uint32_t i = 0; i < count; ++i) {
        const auto name_len = u32();
        need(name_len);
        std::string name(bytes.substr(pos, name_len));
        pos += name_len;
        const std::size_t rows = u32(), cols = u32();
        const std::size_t n = rows * cols;
        if (n > (bytes.size() - pos) / sizeof(double)) fail(ErrorKind::data, "truncated", "checkpoint ends early");
        Tensor t(rows, cols);
        if (n) std::memcpy(t.data.data(), bytes.data() + pos, n * sizeof(double));
        pos += n * sizeof(double);
        ckpt.tensors.emplace_back(std::move(name), std::move(t));
    }
    if (pos != bytes.size()) fail(ErrorKind::data, "trailing-bytes", "unexpected data after last tensor");
    return ckpt;
}

inline void save_checkpoint(const Checkpoint& ckpt, const std::filesystem::path& path) {
    io_detail::write_file(path, encode_checkpoint(ckpt));
}

inline Checkpoint load_checkpoint(const std::filesystem::path& path) { return decode_checkpoint(io_detail::read_file(path)); }

} // namespace pcs

#endif
