#include "liquidseg/checkpoint.hpp"

#include <cstring>
#include <fstream>
#include <stdexcept>

namespace liquidseg {
namespace {

constexpr char kMagic[8] = {'L', 'S', 'E', 'G', 'C', 'K', 'P', '1'};

void write_u32(std::ofstream& f, uint32_t v) {
    f.write(reinterpret_cast<const char*>(&v), 4);
}
void write_u64(std::ofstream& f, uint64_t v) {
    f.write(reinterpret_cast<const char*>(&v), 8);
}
uint32_t read_u32(std::ifstream& f) {
    uint32_t v = 0;
    f.read(reinterpret_cast<char*>(&v), 4);
    return v;
}
uint64_t read_u64(std::ifstream& f) {
    uint64_t v = 0;
    f.read(reinterpret_cast<char*>(&v), 8);
    return v;
}

void open_and_check(std::ifstream& f, const std::string& path) {
    f.open(path, std::ios::binary);
    if (!f) throw std::runtime_error("checkpoint: cannot open " + path);
    char magic[8];
    f.read(magic, 8);
    if (std::memcmp(magic, kMagic, 8) != 0)
        throw std::runtime_error("checkpoint: bad magic in " + path);
}

}  // namespace

void save_checkpoint(const std::string& path, const std::string& config_json,
                     const std::vector<nn::ParamRef>& params) {
    std::ofstream f(path, std::ios::binary | std::ios::trunc);
    if (!f) throw std::runtime_error("checkpoint: cannot write " + path);
    f.write(kMagic, 8);
    write_u64(f, config_json.size());
    f.write(config_json.data(), static_cast<std::streamsize>(config_json.size()));
    write_u32(f, static_cast<uint32_t>(params.size()));
    for (const auto& p : params) {
        write_u32(f, static_cast<uint32_t>(p.name.size()));
        f.write(p.name.data(), static_cast<std::streamsize>(p.name.size()));
        const nn::Tensor& t = *p.value;
        write_u32(f, static_cast<uint32_t>(t.n));
        write_u32(f, static_cast<uint32_t>(t.c));
        write_u32(f, static_cast<uint32_t>(t.h));
        write_u32(f, static_cast<uint32_t>(t.w));
        f.write(reinterpret_cast<const char*>(t.v.data()),
                static_cast<std::streamsize>(t.v.size() * sizeof(double)));
    }
    if (!f) throw std::runtime_error("checkpoint: write failed " + path);
}

std::string load_checkpoint(const std::string& path, std::vector<nn::ParamRef>& params) {
    std::ifstream f;
    open_and_check(f, path);
    uint64_t clen = read_u64(f);
    std::string config(clen, '\0');
    f.read(config.data(), static_cast<std::streamsize>(clen));
    uint32_t count = read_u32(f);
    if (count != params.size())
        throw std::runtime_error("checkpoint: parameter count mismatch in " + path);
    for (auto& p : params) {
        uint32_t nlen = read_u32(f);
        std::string name(nlen, '\0');
        f.read(name.data(), nlen);
        if (name != p.name)
            throw std::runtime_error("checkpoint: expected tensor " + p.name + ", found " + name);
        int n = static_cast<int>(read_u32(f));
        int c = static_cast<int>(read_u32(f));
        int h = static_cast<int>(read_u32(f));
        int w = static_cast<int>(read_u32(f));
        nn::Tensor& t = *p.value;
        if (n != t.n || c != t.c || h != t.h || w != t.w)
            throw std::runtime_error("checkpoint: shape mismatch for " + name);
        f.read(reinterpret_cast<char*>(t.v.data()),
               static_cast<std::streamsize>(t.v.size() * sizeof(double)));
    }
    if (!f) throw std::runtime_error("checkpoint: truncated file " + path);
    return config;
}

std::string read_checkpoint_config(const std::string& path) {
    std::ifstream f;
    open_and_check(f, path);
    uint64_t clen = read_u64(f);
    std::string config(clen, '\0');
    f.read(config.data(), static_cast<std::streamsize>(clen));
    if (!f) throw std::runtime_error("checkpoint: truncated file " + path);
    return config;
}

}  // namespace liquidseg
