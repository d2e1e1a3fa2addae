#include "synthaudit/error.hpp"
#include "synthaudit/quality.hpp"

#include <array>
#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <sstream>
#include <unordered_set>

namespace synthaudit {

namespace {

constexpr std::array<char, 8> kBinaryMagic = {'S', 'A', 'E', 'M', 'B', '\x01', '\0', '\0'};
constexpr const char* kTextHeader = "synthaudit-emb";

std::uint32_t read_u32(std::istream& in, const std::string& source) {
    unsigned char b[4];
    if (!in.read(reinterpret_cast<char*>(b), 4)) throw InputError(source + ": truncated binary embedding file");
    return static_cast<std::uint32_t>(b[0]) | (static_cast<std::uint32_t>(b[1]) << 8) |
           (static_cast<std::uint32_t>(b[2]) << 16) | (static_cast<std::uint32_t>(b[3]) << 24);
}

void write_u32(std::ostream& out, std::uint32_t v) {
    const unsigned char b[4] = {static_cast<unsigned char>(v), static_cast<unsigned char>(v >> 8),
                                static_cast<unsigned char>(v >> 16), static_cast<unsigned char>(v >> 24)};
    out.write(reinterpret_cast<const char*>(b), 4);
}

} // namespace

EmbeddingMatrix::EmbeddingMatrix(std::vector<std::string> ids, Eigen::MatrixXd vectors, std::string provenance)
    : ids_(std::move(ids)), vectors_(std::move(vectors)), provenance_(std::move(provenance)) {
    if (static_cast<Eigen::Index>(ids_.size()) != vectors_.rows()) {
        throw InputError("embedding matrix: " + std::to_string(ids_.size()) + " ids for " +
                         std::to_string(vectors_.rows()) + " rows");
    }
    if (vectors_.cols() < 1) throw InputError("embedding matrix: dimension must be >= 1");
    std::unordered_set<std::string> seen;
    for (std::size_t i = 0; i < ids_.size(); ++i) {
        if (!seen.insert(ids_[i]).second) throw InputError("embedding matrix: duplicate id '" + ids_[i] + "'");
        if (!vectors_.row(static_cast<Eigen::Index>(i)).allFinite()) {
            throw InputError("embedding matrix: non-finite value in row for '" + ids_[i] + "'");
        }
    }
}

Eigen::Index EmbeddingMatrix::find(const std::string& id) const {
    for (std::size_t i = 0; i < ids_.size(); ++i) {
        if (ids_[i] == id) return static_cast<Eigen::Index>(i);
    }
    return -1;
}

EmbeddingMatrix parse_embeddings_text(std::istream& in, const std::string& source) {
    std::string line;
    if (!std::getline(in, line)) throw InputError(source + ": missing embedding header");
    std::istringstream header(line);
    std::string magic, version;
    long long n = -1, d = -1;
    header >> magic >> version >> n >> d;
    if (magic != kTextHeader || version != "v1" || n < 0 || d < 1) {
        throw InputError(source + ":1: expected header 'synthaudit-emb v1 <n> <d>'");
    }
    std::vector<std::string> ids;
    ids.reserve(static_cast<std::size_t>(n));
    Eigen::MatrixXd vectors(n, d);
    std::size_t line_no = 1;
    Eigen::Index row = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
        if (row >= n) throw InputError(source + ":" + std::to_string(line_no) + ": more rows than header declares");
        std::istringstream fields(line);
        std::string id;
        fields >> id;
        for (Eigen::Index j = 0; j < d; ++j) {
            std::string tok;
            if (!(fields >> tok)) {
                throw InputError(source + ":" + std::to_string(line_no) + ": expected " + std::to_string(d) +
                                 " values for '" + id + "'");
            }
            char* end = nullptr;
            const double v = std::strtod(tok.c_str(), &end);
            if (end == tok.c_str() || *end != '\0' || !std::isfinite(v)) {
                throw InputError(source + ":" + std::to_string(line_no) + ": invalid value '" + tok + "'");
            }
            vectors(row, j) = v;
        }
        std::string extra;
        if (fields >> extra) {
            throw InputError(source + ":" + std::to_string(line_no) + ": more than " + std::to_string(d) + " values");
        }
        ids.push_back(std::move(id));
        ++row;
    }
    if (row != n) {
        throw InputError(source + ": header declares " + std::to_string(n) + " rows, found " + std::to_string(row));
    }
    return EmbeddingMatrix(std::move(ids), std::move(vectors), source);
}

EmbeddingMatrix parse_embeddings_binary(std::istream& in, const std::string& source) {
    std::array<char, 8> magic{};
    if (!in.read(magic.data(), magic.size()) || magic != kBinaryMagic) {
        throw InputError(source + ": bad binary embedding magic");
    }
    const std::uint32_t n = read_u32(in, source);
    const std::uint32_t d = read_u32(in, source);
    if (d < 1) throw InputError(source + ": dimension must be >= 1");
    Eigen::MatrixXd vectors(n, d);
    for (std::uint32_t i = 0; i < n; ++i) {
        for (std::uint32_t j = 0; j < d; ++j) {
            const std::uint32_t bits = read_u32(in, source);
            vectors(i, j) = static_cast<double>(std::bit_cast<float>(bits));
        }
    }
    std::vector<std::string> ids(n);
    for (auto& id : ids) {
        const std::uint32_t len = read_u32(in, source);
        id.resize(len);
        if (len && !in.read(id.data(), len)) throw InputError(source + ": truncated id table");
    }
    return EmbeddingMatrix(std::move(ids), std::move(vectors), source);
}

EmbeddingMatrix load_embeddings(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open embedding file " + path.string());
    std::array<char, 8> head{};
    in.read(head.data(), head.size());
    const bool binary = in.gcount() == static_cast<std::streamsize>(head.size()) && head == kBinaryMagic;
    in.clear();
    in.seekg(0);
    return binary ? parse_embeddings_binary(in, path.string()) : parse_embeddings_text(in, path.string());
}

void write_embeddings_text(const EmbeddingMatrix& m, std::ostream& out) {
    out << kTextHeader << " v1 " << m.rows() << ' ' << m.dim() << '\n';
    char buf[32];
    for (Eigen::Index i = 0; i < m.rows(); ++i) {
        out << m.ids()[static_cast<std::size_t>(i)];
        for (Eigen::Index j = 0; j < m.dim(); ++j) {
            std::snprintf(buf, sizeof buf, " %.17g", m.vectors()(i, j));
            out << buf;
        }
        out << '\n';
    }
}

void write_embeddings_binary(const EmbeddingMatrix& m, std::ostream& out) {
    out.write(kBinaryMagic.data(), kBinaryMagic.size());
    write_u32(out, static_cast<std::uint32_t>(m.rows()));
    write_u32(out, static_cast<std::uint32_t>(m.dim()));
    for (Eigen::Index i = 0; i < m.rows(); ++i) {
        for (Eigen::Index j = 0; j < m.dim(); ++j) {
            write_u32(out, std::bit_cast<std::uint32_t>(static_cast<float>(m.vectors()(i, j))));
        }
    }
    for (const auto& id : m.ids()) {
        write_u32(out, static_cast<std::uint32_t>(id.size()));
        out.write(id.data(), static_cast<std::streamsize>(id.size()));
    }
}

void save_embeddings(const EmbeddingMatrix& m, const std::filesystem::path& path, bool binary) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot write " + path.string());
    if (binary) write_embeddings_binary(m, out);
    else write_embeddings_text(m, out);
}

} // namespace synthaudit
