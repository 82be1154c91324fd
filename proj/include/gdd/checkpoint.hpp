#pragma once

// Checkpoint layout:
//   "GDD1"                       4 bytes
//   header length                u64, little-endian
//   header                       JSON: config, vocab, tags, tensor directory
//   tensor data                  f64 little-endian, directory order

#include <bit>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <string>

#include <json.hpp>

#include "gdd/config.hpp"
#include "gdd/model.hpp"

namespace gdd {

inline constexpr char checkpoint_magic[4] = {'G', 'D', 'D', '1'};

namespace detail {

inline void put_u64(std::ostream& out, std::uint64_t v) {
    char b[8];
    for (int i = 0; i < 8; ++i) b[i] = static_cast<char>((v >> (8 * i)) & 0xFF);
    out.write(b, 8);
}

inline std::uint64_t get_u64(std::istream& in, const char* what) {
    unsigned char b[8];
    if (!in.read(reinterpret_cast<char*>(b), 8)) throw io_error(std::string("checkpoint: truncated ") + what);
    std::uint64_t v = 0;
    for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(b[i]) << (8 * i);
    return v;
}

} // namespace detail

inline void save_checkpoint(const Model& model, std::ostream& out) {
    nlohmann::json dir = nlohmann::json::array();
    for (const auto& p : model.params()) dir.push_back({{"name", p.name}, {"shape", p.value.shape()}});
    const nlohmann::json header = {{"config", config_to_json(model.config())},
                                   {"vocab", model.vocab().items()},
                                   {"tags", model.tag_vocab().tags().items()},
                                   {"tensors", dir}};
    const std::string h = header.dump();
    out.write(checkpoint_magic, 4);
    detail::put_u64(out, h.size());
    out.write(h.data(), static_cast<std::streamsize>(h.size()));
    for (const auto& p : model.params())
        for (double v : p.value.data()) detail::put_u64(out, std::bit_cast<std::uint64_t>(v));
    if (!out) throw io_error("checkpoint: write failed");
}

inline void save_checkpoint(const Model& model, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw io_error("cannot open '" + path + "' for writing");
    save_checkpoint(model, out);
}

/// Rebuilds the model from the stored config and vocabularies, then checks
/// that every stored tensor matches the architecture by name and shape.
inline Model load_checkpoint(std::istream& in) {
    char magic[4];
    if (!in.read(magic, 4) || std::memcmp(magic, checkpoint_magic, 4) != 0)
        throw value_error("checkpoint: bad magic header (expected GDD1)");
    const std::uint64_t len = detail::get_u64(in, "header length");
    if (len > (std::uint64_t{1} << 32)) throw value_error("checkpoint: implausible header length");
    std::string h(len, '\0');
    if (!in.read(h.data(), static_cast<std::streamsize>(len))) throw io_error("checkpoint: truncated header");

    nlohmann::json header;
    try {
        header = nlohmann::json::parse(h);
    } catch (const nlohmann::json::exception& e) {
        throw value_error(std::string("checkpoint: header is not valid JSON: ") + e.what());
    }
    Model model = [&] {
        try {
            const ModelConfig cfg = config_from_json(header.at("config"));
            Vocab vocab = Vocab::from_items(header.at("vocab").get<std::vector<std::string>>());
            TagVocab tags(Vocab::from_items(header.at("tags").get<std::vector<std::string>>()), cfg.kappa_max);
            return Model(cfg, std::move(vocab), std::move(tags));
        } catch (const nlohmann::json::exception& e) {
            throw value_error(std::string("checkpoint: malformed header: ") + e.what());
        }
    }();

    const auto& dir = header.at("tensors");
    if (dir.size() != model.params().size())
        throw value_error("checkpoint: stores " + std::to_string(dir.size()) + " tensors, config implies " +
                          std::to_string(model.params().size()));
    for (std::size_t i = 0; i < dir.size(); ++i) {
        Param& p = model.params()[i];
        const auto name = dir[i].at("name").get<std::string>();
        const auto shape = dir[i].at("shape").get<Shape>();
        if (name != p.name) throw value_error("checkpoint: tensor " + std::to_string(i) + " is '" + name + "', expected '" + p.name + "'");
        if (shape != p.value.shape())
            throw value_error("checkpoint: tensor '" + name + "' has shape " + shape_str(shape) + ", config implies " +
                              shape_str(p.value.shape()));
        for (double& v : p.value.data()) v = std::bit_cast<double>(detail::get_u64(in, "tensor data"));
    }
    if (in.peek() != std::char_traits<char>::eof()) throw value_error("checkpoint: trailing bytes after tensor data");
    return model;
}

inline Model load_checkpoint(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw io_error("cannot open checkpoint '" + path + "'");
    return load_checkpoint(in);
}

} // namespace gdd
