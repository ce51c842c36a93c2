// SPDX-License-Identifier: Apache-2.0
#include "geopli/checkpoint.hpp"

#include <bit>
#include <cstdint>
#include <fstream>
#include <map>

#include "geopli/errors.hpp"

namespace geopli {

namespace {

constexpr char kMagic[8] = {'G', 'P', 'L', 'C', 'K', 'P', 'T', '\0'};

void write_u32(std::ostream& os, std::uint32_t v) {
    char b[4];
    for (int i = 0; i < 4; ++i) b[i] = static_cast<char>((v >> (8 * i)) & 0xff);
    os.write(b, 4);
}

void write_u64(std::ostream& os, std::uint64_t v) {
    char b[8];
    for (int i = 0; i < 8; ++i) b[i] = static_cast<char>((v >> (8 * i)) & 0xff);
    os.write(b, 8);
}

void write_f64(std::ostream& os, double v) { write_u64(os, std::bit_cast<std::uint64_t>(v)); }

std::uint32_t read_u32(std::istream& is) {
    unsigned char b[4];
    is.read(reinterpret_cast<char*>(b), 4);
    if (!is) throw TransferError("checkpoint truncated");
    std::uint32_t v = 0;
    for (int i = 3; i >= 0; --i) v = (v << 8) | b[i];
    return v;
}

std::uint64_t read_u64(std::istream& is) {
    unsigned char b[8];
    is.read(reinterpret_cast<char*>(b), 8);
    if (!is) throw TransferError("checkpoint truncated");
    std::uint64_t v = 0;
    for (int i = 7; i >= 0; --i) v = (v << 8) | b[i];
    return v;
}

double read_f64(std::istream& is) { return std::bit_cast<double>(read_u64(is)); }

void write_string(std::ostream& os, const std::string& s) {
    write_u32(os, static_cast<std::uint32_t>(s.size()));
    os.write(s.data(), static_cast<std::streamsize>(s.size()));
}

std::string read_string(std::istream& is) {
    const std::uint32_t n = read_u32(is);
    std::string s(n, '\0');
    is.read(s.data(), n);
    if (!is) throw TransferError("checkpoint truncated");
    return s;
}

void write_tensor(std::ostream& os, const Tensor& t) {
    write_u32(os, static_cast<std::uint32_t>(t.rank()));
    for (std::size_t d : t.shape()) write_u64(os, d);
    for (double v : t.data()) write_f64(os, v);
}

Tensor read_tensor(std::istream& is) {
    const std::uint32_t rank = read_u32(is);
    std::vector<std::size_t> shape(rank);
    for (auto& d : shape) d = static_cast<std::size_t>(read_u64(is));
    std::vector<double> data(shape_product(shape));
    for (double& v : data) v = read_f64(is);
    return Tensor(std::move(shape), std::move(data));
}

void write_section(std::ostream& os, const std::map<std::string, Tensor>& section) {
    write_u32(os, static_cast<std::uint32_t>(section.size()));
    for (const auto& [name, tensor] : section) {
        write_string(os, name);
        write_tensor(os, tensor);
    }
}

std::map<std::string, Tensor> read_section(std::istream& is) {
    std::map<std::string, Tensor> out;
    const std::uint32_t n = read_u32(is);
    for (std::uint32_t i = 0; i < n; ++i) {
        std::string name = read_string(is);
        out.emplace(std::move(name), read_tensor(is));
    }
    return out;
}

}  // namespace

void save_checkpoint(const ParamStore& params, const std::string& path) {
    std::ofstream os(path, std::ios::binary | std::ios::trunc);
    if (!os) throw IoError("cannot open checkpoint for writing: " + path);
    os.write(kMagic, sizeof(kMagic));
    write_u32(os, kCheckpointVersion);
    write_u64(os, params.seed());
    write_u64(os, params.adam_step_count());
    write_section(os, params.entries());
    write_section(os, params.adam_m());
    write_section(os, params.adam_v());
    if (!os) throw IoError("failed writing checkpoint: " + path);
}

ParamStore load_checkpoint(const std::string& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw IoError("cannot open checkpoint for reading: " + path);
    char magic[8];
    is.read(magic, sizeof(magic));
    if (!is || std::string(magic, 8) != std::string(kMagic, 8)) {
        throw TransferError("not a checkpoint file: " + path);
    }
    const std::uint32_t version = read_u32(is);
    if (version != kCheckpointVersion) {
        throw TransferError("unsupported checkpoint version " + std::to_string(version));
    }
    ParamStore store(read_u64(is));
    store.set_adam_step_count(read_u64(is));
    for (auto& [name, tensor] : read_section(is)) store.add(name, std::move(tensor));
    store.adam_m() = read_section(is);
    store.adam_v() = read_section(is);
    return store;
}

}  // namespace geopli
