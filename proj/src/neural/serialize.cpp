#include <bit>
#include <cstring>
#include <fstream>

#include "alphaforge/errors.hpp"
#include "alphaforge/network.hpp"

namespace alphaforge {

namespace {

constexpr char kMagic[4] = {'A', 'F', 'N', 'N'};
constexpr std::uint32_t kVersion = 1;

static_assert(std::endian::native == std::endian::little,
              "parameter files are written in little-endian order");

template <class T>
void put(std::ostream& out, T v) {
    out.write(reinterpret_cast<const char*>(&v), sizeof(T));
}

template <class T>
T get(std::istream& in) {
    T v{};
    if (!in.read(reinterpret_cast<char*>(&v), sizeof(T)))
        throw DataError("truncated parameter file");
    return v;
}

}  // namespace

void save_network(const Network& net, const std::filesystem::path& path) {
    // Write to a sibling file and rename so readers never see a partial file.
    auto tmp = path;
    tmp += ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw DataError("cannot write " + tmp.string());
        out.write(kMagic, 4);
        put<std::uint32_t>(out, kVersion);
        const auto& s = net.shape();
        for (std::size_t v : {s.d_emb, s.d_h, s.policy_hidden, s.value_hidden, s.actions})
            put<std::uint64_t>(out, v);
        const auto& tensors = net.params().tensors;
        put<std::uint32_t>(out, static_cast<std::uint32_t>(tensors.size()));
        for (const auto& t : tensors) {
            put<std::uint64_t>(out, static_cast<std::uint64_t>(t.rows()));
            put<std::uint64_t>(out, static_cast<std::uint64_t>(t.cols()));
        }
        for (const auto& t : tensors)
            for (Eigen::Index i = 0; i < t.rows(); ++i)
                for (Eigen::Index j = 0; j < t.cols(); ++j) put<double>(out, t(i, j));
        if (!out) throw DataError("failed writing " + tmp.string());
    }
    std::filesystem::rename(tmp, path);
}

Network load_network(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw DataError("cannot open " + path.string());
    char magic[4];
    if (!in.read(magic, 4) || std::memcmp(magic, kMagic, 4) != 0)
        throw DataError(path.string() + " is not a parameter file");
    if (get<std::uint32_t>(in) != kVersion)
        throw DataError(path.string() + ": unsupported parameter file version");
    NetworkShape s;
    s.d_emb = get<std::uint64_t>(in);
    s.d_h = get<std::uint64_t>(in);
    s.policy_hidden = get<std::uint64_t>(in);
    s.value_hidden = get<std::uint64_t>(in);
    s.actions = get<std::uint64_t>(in);
    const auto count = get<std::uint32_t>(in);
    if (count != slot::kCount) throw DataError(path.string() + ": unexpected tensor count");
    Parameters p;
    std::vector<std::pair<std::uint64_t, std::uint64_t>> dims;
    for (std::uint32_t i = 0; i < count; ++i) {
        const auto r = get<std::uint64_t>(in);
        const auto c = get<std::uint64_t>(in);
        if (r > (1u << 20) || c > (1u << 20)) throw DataError("implausible tensor shape");
        dims.emplace_back(r, c);
    }
    for (const auto& [r, c] : dims) {
        Eigen::MatrixXd t(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c));
        for (Eigen::Index i = 0; i < t.rows(); ++i)
            for (Eigen::Index j = 0; j < t.cols(); ++j) t(i, j) = get<double>(in);
        p.tensors.push_back(std::move(t));
    }
    try {
        return Network(s, std::move(p));
    } catch (const std::invalid_argument& e) {
        throw DataError(path.string() + ": " + e.what());
    }
}

}  // namespace alphaforge
