#include "cae/embedding_store.hpp"

#include <bit>
#include <cmath>
#include <fstream>
#include <iterator>
#include <sstream>
#include <string>

#include "cae/error.hpp"

namespace cae {
namespace {

constexpr std::size_t kEmbHeaderSize = 16;

void put_u32(std::vector<std::uint8_t>& out, std::uint32_t v) {
    for (int b = 0; b < 4; ++b) out.push_back(static_cast<std::uint8_t>(v >> (8 * b)));
}

std::uint32_t get_u32(std::span<const std::uint8_t> bytes, std::size_t offset) {
    std::uint32_t v = 0;
    for (int b = 0; b < 4; ++b) v |= static_cast<std::uint32_t>(bytes[offset + b]) << (8 * b);
    return v;
}

std::vector<std::uint8_t> read_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open " + path.string() + " for reading");
    std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)),
                                    std::istreambuf_iterator<char>());
    if (in.bad()) throw IoError("read failure on " + path.string());
    return bytes;
}

void write_file(const std::vector<std::uint8_t>& bytes, const std::filesystem::path& path) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot open " + path.string() + " for writing");
    out.write(reinterpret_cast<const char*>(bytes.data()),
              static_cast<std::streamsize>(bytes.size()));
    out.flush();
    if (!out) throw IoError("write failure on " + path.string());
}

void check_magic(std::span<const std::uint8_t> bytes, std::string_view magic) {
    if (bytes.size() < magic.size())
        throw FormatError("truncated header: " + std::to_string(bytes.size()) +
                          " bytes, magic needs " + std::to_string(magic.size()) + " at offset 0");
    for (std::size_t k = 0; k < magic.size(); ++k)
        if (bytes[k] != static_cast<std::uint8_t>(magic[k]))
            throw FormatError("bad magic at offset " + std::to_string(k) + ": expected \"" +
                              std::string(magic) + "\"");
}

std::vector<std::uint32_t> parse_u32_list(std::span<const std::uint8_t> bytes,
                                          std::size_t offset, const std::string& what) {
    if (bytes.size() < offset + 4)
        throw FormatError(what + ": truncated count at offset " + std::to_string(offset));
    const std::uint32_t count = get_u32(bytes, offset);
    offset += 4;
    const std::size_t expected = offset + 4ull * count;
    if (bytes.size() < expected)
        throw FormatError(what + ": truncated payload, declared " + std::to_string(count) +
                          " entries but data ends at offset " + std::to_string(bytes.size()));
    if (bytes.size() > expected)
        throw FormatError(what + ": trailing bytes at offset " + std::to_string(expected));
    std::vector<std::uint32_t> out(count);
    for (std::uint32_t i = 0; i < count; ++i) out[i] = get_u32(bytes, offset + 4ull * i);
    return out;
}

}  // namespace

std::string_view to_string(Modality m) {
    switch (m) {
        case Modality::image: return "image";
        case Modality::noun: return "noun";
        case Modality::caption: return "caption";
        case Modality::fused: return "fused";
    }
    return "unknown";
}

Modality modality_from_string(std::string_view s) {
    if (s == "image") return Modality::image;
    if (s == "noun") return Modality::noun;
    if (s == "caption") return Modality::caption;
    if (s == "fused") return Modality::fused;
    throw ConfigError("unknown modality '" + std::string(s) + "'");
}

EmbeddingMatrix::EmbeddingMatrix(Matrix values, Modality modality)
    : values_(std::move(values)), modality_(modality) {
    if (values_.rows() == 0) throw FormatError("embedding matrix has zero rows");
    if (values_.cols() == 0) throw FormatError("embedding matrix has zero dim");
    for (std::size_t i = 0; i < values_.rows(); ++i)
        for (double v : values_.row(i))
            if (!std::isfinite(v))
                throw FormatError("non-finite entry in row " + std::to_string(i));
}

EmbeddingMatrix parse_embeddings(std::span<const std::uint8_t> bytes) {
    check_magic(bytes, "EMB1");
    if (bytes.size() < kEmbHeaderSize)
        throw FormatError("truncated header: " + std::to_string(bytes.size()) + " of " +
                          std::to_string(kEmbHeaderSize) + " bytes");
    const std::uint8_t code = bytes[4];
    if (code > 3) throw FormatError("bad modality code " + std::to_string(code) + " at offset 4");
    for (std::size_t k = 5; k < 8; ++k)
        if (bytes[k] != 0) throw FormatError("nonzero padding at offset " + std::to_string(k));
    const std::uint32_t rows = get_u32(bytes, 8);
    const std::uint32_t dim = get_u32(bytes, 12);
    if (rows == 0) throw FormatError("zero rows declared at offset 8");
    if (dim == 0) throw FormatError("zero dim declared at offset 12");

    const std::size_t count = static_cast<std::size_t>(rows) * dim;
    const std::size_t expected = kEmbHeaderSize + 4 * count;
    if (bytes.size() < expected)
        throw FormatError("truncated payload: header declares " + std::to_string(count) +
                          " values (" + std::to_string(expected) + " bytes) but data ends at offset " +
                          std::to_string(bytes.size()));
    if (bytes.size() > expected)
        throw FormatError("trailing bytes at offset " + std::to_string(expected));

    std::vector<double> data(count);
    for (std::size_t k = 0; k < count; ++k) {
        const std::size_t offset = kEmbHeaderSize + 4 * k;
        const float v = std::bit_cast<float>(get_u32(bytes, offset));
        if (!std::isfinite(v))
            throw FormatError("non-finite value in row " + std::to_string(k / dim) + " at offset " +
                              std::to_string(offset));
        data[k] = v;
    }
    return {Matrix(rows, dim, std::move(data)), static_cast<Modality>(code)};
}

EmbeddingMatrix load_embeddings(const std::filesystem::path& path) {
    const auto bytes = read_file(path);
    try {
        return parse_embeddings(bytes);
    } catch (const FormatError& e) {
        throw FormatError(path.string() + ": " + e.what());
    }
}

std::vector<std::uint8_t> serialize_embeddings(const EmbeddingMatrix& m) {
    std::vector<std::uint8_t> out;
    out.reserve(kEmbHeaderSize + 4 * m.rows() * m.dim());
    for (char c : std::string_view("EMB1")) out.push_back(static_cast<std::uint8_t>(c));
    out.push_back(static_cast<std::uint8_t>(m.modality()));
    out.insert(out.end(), 3, 0);
    put_u32(out, static_cast<std::uint32_t>(m.rows()));
    put_u32(out, static_cast<std::uint32_t>(m.dim()));
    for (double v : m.values().data()) put_u32(out, std::bit_cast<std::uint32_t>(static_cast<float>(v)));
    return out;
}

void save_embeddings(const EmbeddingMatrix& m, const std::filesystem::path& path) {
    write_file(serialize_embeddings(m), path);
}

LabelVector load_labels(const std::filesystem::path& path) {
    const auto bytes = read_file(path);
    check_magic(bytes, "LBL1");
    return parse_u32_list(bytes, 4, path.string());
}

void save_labels(const LabelVector& labels, const std::filesystem::path& path) {
    std::vector<std::uint8_t> out;
    for (char c : std::string_view("LBL1")) out.push_back(static_cast<std::uint8_t>(c));
    put_u32(out, static_cast<std::uint32_t>(labels.size()));
    for (auto l : labels) put_u32(out, l);
    write_file(out, path);
}

std::vector<std::uint32_t> load_index_list(const std::filesystem::path& path) {
    return parse_u32_list(read_file(path), 0, path.string());
}

void save_index_list(std::span<const std::uint32_t> indices, const std::filesystem::path& path) {
    std::vector<std::uint8_t> out;
    put_u32(out, static_cast<std::uint32_t>(indices.size()));
    for (auto i : indices) put_u32(out, i);
    write_file(out, path);
}

EmbeddingMatrix read_csv_embeddings(std::istream& in, Modality modality) {
    std::vector<double> data;
    std::size_t rows = 0, dim = 0, line_no = 0;
    std::string line;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty() || line[0] == '#' || line.find_first_not_of(" \t\r") == std::string::npos)
            continue;
        std::stringstream ss(line);
        std::string cell;
        std::size_t cells = 0;
        while (std::getline(ss, cell, ',')) {
            try {
                std::size_t used = 0;
                data.push_back(std::stod(cell, &used));
                if (cell.find_first_not_of(" \t\r", used) != std::string::npos) throw std::invalid_argument(cell);
            } catch (const std::logic_error&) {
                throw FormatError("csv line " + std::to_string(line_no) + ": bad number '" + cell + "'");
            }
            ++cells;
        }
        if (rows == 0) dim = cells;
        if (cells != dim)
            throw FormatError("csv line " + std::to_string(line_no) + ": " + std::to_string(cells) +
                              " values, expected " + std::to_string(dim));
        ++rows;
    }
    return {Matrix(rows, dim, std::move(data)), modality};
}

EmbeddingMatrix l2_normalize(const EmbeddingMatrix& m) {
    Matrix out = m.values();
    for (std::size_t i = 0; i < out.rows(); ++i) {
        auto r = out.row(i);
        const double n = norm(r);
        if (n == 0.0) throw NumericError("cannot normalize zero row " + std::to_string(i));
        for (double& v : r) v /= n;
    }
    return {std::move(out), m.modality()};
}

SimilarityMatrix cosine_similarity(const EmbeddingMatrix& a, const EmbeddingMatrix& b) {
    if (a.dim() != b.dim())
        throw ShapeError("cosine_similarity: dim " + std::to_string(a.dim()) + " vs " +
                         std::to_string(b.dim()));
    std::vector<double> na(a.rows()), nb(b.rows());
    for (std::size_t i = 0; i < a.rows(); ++i) {
        na[i] = norm(a.row(i));
        if (na[i] == 0.0) throw NumericError("cosine_similarity: zero row " + std::to_string(i) + " in left operand");
    }
    for (std::size_t j = 0; j < b.rows(); ++j) {
        nb[j] = norm(b.row(j));
        if (nb[j] == 0.0) throw NumericError("cosine_similarity: zero row " + std::to_string(j) + " in right operand");
    }
    Matrix s(a.rows(), b.rows());
    for (std::size_t i = 0; i < a.rows(); ++i)
        for (std::size_t j = 0; j < b.rows(); ++j)
            s(i, j) = dot(a.row(i), b.row(j)) / (na[i] * nb[j]);
    return {std::move(s)};
}

}  // namespace cae
