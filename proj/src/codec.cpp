#include "wsc/codec.hpp"

#include "wsc/bitstream.hpp"
#include "io_util.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <queue>
#include <sstream>

namespace wsc {

namespace {

void check_cardinalities(std::uint64_t n, const std::vector<std::uint64_t>& cards) {
    if (cards.empty()) throw std::invalid_argument("no bins");
    const std::uint64_t total = std::accumulate(cards.begin(), cards.end(), std::uint64_t{0});
    if (total != n) {
        std::ostringstream msg;
        msg << "cardinality sum " << total << " != N " << n;
        throw std::invalid_argument(msg.str());
    }
}

// Assigns canonical codewords in (length, symbol) order.
void assign_canonical_codes(HuffmanTable& table) {
    const std::size_t d = table.lengths.size();
    std::vector<std::uint32_t> symbols(d);
    std::iota(symbols.begin(), symbols.end(), 0);
    std::sort(symbols.begin(), symbols.end(), [&](std::uint32_t a, std::uint32_t b) {
        if (table.lengths[a] != table.lengths[b]) return table.lengths[a] < table.lengths[b];
        return a < b;
    });

    table.codes.assign(d, 0);
    std::uint64_t code = 0;
    std::uint8_t prev_length = table.lengths[symbols[0]];
    for (std::size_t i = 0; i < d; ++i) {
        const std::uint32_t symbol = symbols[i];
        code <<= (table.lengths[symbol] - prev_length);
        table.codes[symbol] = code;
        prev_length = table.lengths[symbol];
        ++code;
    }
}

} // namespace

HuffmanTable build_huffman(const std::vector<std::uint64_t>& cardinalities) {
    const std::size_t d = cardinalities.size();
    if (d == 0) throw std::invalid_argument("no bins");
    for (std::uint64_t card : cardinalities)
        if (card == 0) throw std::invalid_argument("zero-cardinality bin");

    HuffmanTable table;
    if (d == 1) {
        // A zero-bit code cannot delimit a stream; the lone symbol gets one bit.
        table.lengths = {1};
        table.codes = {0};
        return table;
    }

    // Two smallest subtrees merge first; ties break toward the node created
    // earliest, which for leaves means the lower bin index.
    struct Node {
        std::uint64_t freq;
        std::uint64_t serial;
        int left = -1, right = -1;
        std::uint32_t symbol = 0;
    };
    std::vector<Node> nodes;
    nodes.reserve(2 * d);
    auto cmp = [&](int a, int b) {
        if (nodes[static_cast<std::size_t>(a)].freq != nodes[static_cast<std::size_t>(b)].freq)
            return nodes[static_cast<std::size_t>(a)].freq > nodes[static_cast<std::size_t>(b)].freq;
        return nodes[static_cast<std::size_t>(a)].serial > nodes[static_cast<std::size_t>(b)].serial;
    };
    std::priority_queue<int, std::vector<int>, decltype(cmp)> queue(cmp);
    for (std::size_t i = 0; i < d; ++i) {
        nodes.push_back({cardinalities[i] + 1, i, -1, -1, static_cast<std::uint32_t>(i)});
        queue.push(static_cast<int>(i));
    }
    while (queue.size() > 1) {
        const int a = queue.top();
        queue.pop();
        const int b = queue.top();
        queue.pop();
        nodes.push_back({nodes[static_cast<std::size_t>(a)].freq +
                             nodes[static_cast<std::size_t>(b)].freq,
                         nodes.size(), a, b, 0});
        queue.push(static_cast<int>(nodes.size()) - 1);
    }

    table.lengths.assign(d, 0);
    // Iterative depth walk from the root.
    std::vector<std::pair<int, std::uint8_t>> stack{{queue.top(), 0}};
    while (!stack.empty()) {
        const auto [idx, depth] = stack.back();
        stack.pop_back();
        const Node& node = nodes[static_cast<std::size_t>(idx)];
        if (node.left < 0) {
            table.lengths[node.symbol] = depth;
        } else {
            stack.push_back({node.left, static_cast<std::uint8_t>(depth + 1)});
            stack.push_back({node.right, static_cast<std::uint8_t>(depth + 1)});
        }
    }
    assign_canonical_codes(table);
    return table;
}

HuffmanTable huffman_from_lengths(std::vector<std::uint8_t> lengths) {
    if (lengths.empty()) throw std::invalid_argument("no code lengths");
    for (std::uint8_t length : lengths)
        if (length == 0 || length > 63)
            throw io_error("invalid Huffman code length " + std::to_string(length));
    // Kraft sum must not exceed 1 or decoding is ambiguous.
    long double kraft = 0.0L;
    for (std::uint8_t length : lengths) kraft += std::pow(2.0L, -static_cast<long double>(length));
    if (kraft > 1.0L + 1e-12L) throw io_error("code lengths violate the Kraft inequality");

    HuffmanTable table;
    table.lengths = std::move(lengths);
    assign_canonical_codes(table);
    return table;
}

std::vector<std::uint8_t> encode_indices(const std::vector<std::uint32_t>& indices,
                                         const HuffmanTable& table,
                                         std::uint64_t* bit_length_out) {
    BitWriter writer;
    for (std::uint32_t index : indices) {
        if (index >= table.size())
            throw std::invalid_argument("index " + std::to_string(index) + " has no code");
        writer.put(table.codes[index], table.lengths[index]);
    }
    if (bit_length_out) *bit_length_out = writer.bit_count();
    return writer.take();
}

std::vector<std::uint32_t> decode_indices(const std::vector<std::uint8_t>& payload,
                                          const HuffmanTable& table, std::size_t count) {
    // Canonical decoding: for each admissible length, the valid codewords
    // form one contiguous range [first_code, first_code + count).
    const std::size_t d = table.size();
    std::uint8_t max_length = 0;
    for (std::uint8_t length : table.lengths) max_length = std::max(max_length, length);

    std::vector<std::uint32_t> count_per_length(max_length + 1, 0);
    for (std::uint8_t length : table.lengths) ++count_per_length[length];

    std::vector<std::uint32_t> symbols(d);
    std::iota(symbols.begin(), symbols.end(), 0);
    std::sort(symbols.begin(), symbols.end(), [&](std::uint32_t a, std::uint32_t b) {
        if (table.lengths[a] != table.lengths[b]) return table.lengths[a] < table.lengths[b];
        return a < b;
    });

    std::vector<std::uint64_t> first_code(max_length + 1, 0);
    std::vector<std::uint32_t> first_symbol_pos(max_length + 1, 0);
    {
        std::uint64_t code = 0;
        std::uint32_t pos = 0;
        for (std::uint8_t length = 1; length <= max_length; ++length) {
            code <<= 1;
            first_code[length] = code;
            first_symbol_pos[length] = pos;
            code += count_per_length[length];
            pos += count_per_length[length];
        }
    }

    BitReader reader(payload);
    std::vector<std::uint32_t> indices;
    indices.reserve(count);
    for (std::size_t i = 0; i < count; ++i) {
        std::uint64_t code = 0;
        std::uint8_t length = 0;
        for (;;) {
            if (reader.eof()) throw io_error("truncated Huffman stream");
            code = (code << 1) | reader.get_bit();
            ++length;
            if (length > max_length) throw io_error("invalid Huffman codeword");
            if (count_per_length[length] != 0 &&
                code < first_code[length] + count_per_length[length]) {
                if (code < first_code[length]) continue;
                indices.push_back(
                    symbols[first_symbol_pos[length] +
                            static_cast<std::uint32_t>(code - first_code[length])]);
                break;
            }
        }
    }
    return indices;
}

std::uint32_t fixed_index_bits(std::size_t d) {
    if (d == 0) throw std::invalid_argument("no bins");
    std::uint32_t bits = 0;
    while ((std::size_t{1} << bits) < d) ++bits;
    return bits;
}

double cr_fixed(std::uint64_t n, const std::vector<std::uint64_t>& cardinalities) {
    check_cardinalities(n, cardinalities);
    const std::uint64_t d = cardinalities.size();
    const double index_entries = static_cast<double>(n) + static_cast<double>(d); // sum (|C_i|+1)
    const double denom = static_cast<double>(d) * 32.0 +
                         static_cast<double>(fixed_index_bits(d)) * index_entries;
    return static_cast<double>(n) * 32.0 / denom;
}

double cr_huffman(std::uint64_t n, const std::vector<std::uint64_t>& cardinalities,
                  const HuffmanTable& table) {
    check_cardinalities(n, cardinalities);
    if (table.size() != cardinalities.size())
        throw std::invalid_argument("table size != bin count");
    const std::uint64_t d = cardinalities.size();
    double index_bits = 0.0;
    for (std::size_t i = 0; i < cardinalities.size(); ++i)
        index_bits += static_cast<double>(table.lengths[i]) *
                      static_cast<double>(cardinalities[i] + 1);
    return static_cast<double>(n) * 32.0 / (static_cast<double>(d) * 32.0 + index_bits);
}

double avg_bits(const HuffmanTable& table, const std::vector<std::uint64_t>& cardinalities) {
    if (table.size() != cardinalities.size())
        throw std::invalid_argument("table size != bin count");
    double weighted = 0.0;
    double total = 0.0;
    for (std::size_t i = 0; i < cardinalities.size(); ++i) {
        const double freq = static_cast<double>(cardinalities[i] + 1);
        weighted += static_cast<double>(table.lengths[i]) * freq;
        total += freq;
    }
    return weighted / total;
}

CompressionReport make_compression_report(std::uint64_t n,
                                          const std::vector<std::uint64_t>& cardinalities,
                                          const HuffmanTable& table) {
    CompressionReport report;
    report.n = n;
    report.d = cardinalities.size();
    report.fixed_bits = fixed_index_bits(cardinalities.size());
    report.avg_bits = avg_bits(table, cardinalities);
    report.cr_fixed = cr_fixed(n, cardinalities);
    report.cr_huffman = cr_huffman(n, cardinalities, table);
    return report;
}

namespace {

constexpr char kCompressedMagic[4] = {'W', 'S', 'H', 'C'};
constexpr std::uint16_t kFormatVersion = 1;

} // namespace

void save_compressed(const Codebook& codebook, const HuffmanTable& table,
                     const std::filesystem::path& path) {
    validate(codebook);
    if (table.size() != codebook.d())
        throw std::invalid_argument("Huffman table size != codebook bin count");

    std::uint64_t bit_length = 0;
    const auto payload = encode_indices(codebook.indices, table, &bit_length);

    auto out = detail::open_out(path);
    detail::write_bytes(out, kCompressedMagic, 4);
    detail::write_le<std::uint16_t>(out, kFormatVersion);
    detail::write_le<std::uint64_t>(out, codebook.n());
    detail::write_le<std::uint32_t>(out, static_cast<std::uint32_t>(codebook.d()));
    for (const Bin& bin : codebook.bins)
        detail::write_le<float>(out, static_cast<float>(bin.centroid));
    for (std::uint8_t length : table.lengths) detail::write_le<std::uint8_t>(out, length);
    detail::write_le<std::uint64_t>(out, bit_length);
    detail::write_bytes(out, payload.data(), payload.size());
    if (!out) throw io_error("write failed: " + path.string());
}

CompressedModel load_compressed(const std::filesystem::path& path) {
    auto in = detail::open_in(path);
    detail::expect_magic(in, kCompressedMagic, "WSHC");
    const auto version = detail::read_le<std::uint16_t>(in, "version");
    if (version != kFormatVersion)
        throw io_error("unsupported WSHC version " + std::to_string(version));

    CompressedModel compressed;
    compressed.n = detail::read_le<std::uint64_t>(in, "N");
    const auto d = detail::read_le<std::uint32_t>(in, "d");
    if (d == 0) throw io_error("WSHC file with zero bins");
    compressed.centroids.resize(d);
    for (auto& centroid : compressed.centroids)
        centroid = detail::read_le<float>(in, "centroids");
    std::vector<std::uint8_t> lengths(d);
    for (auto& length : lengths) length = detail::read_le<std::uint8_t>(in, "code lengths");
    compressed.table = huffman_from_lengths(std::move(lengths));

    const auto bit_length = detail::read_le<std::uint64_t>(in, "payload bit length");
    const std::size_t payload_bytes = static_cast<std::size_t>((bit_length + 7) / 8);
    std::vector<std::uint8_t> payload(payload_bytes);
    if (payload_bytes > 0) detail::read_bytes(in, payload.data(), payload_bytes, "bitstream");
    compressed.indices =
        decode_indices(payload, compressed.table, static_cast<std::size_t>(compressed.n));
    return compressed;
}

ModelSpec apply_compressed(const ModelSpec& skeleton, const CompressedModel& compressed) {
    ParameterVector theta = flatten(skeleton);
    if (theta.size() != compressed.n) {
        std::ostringstream msg;
        msg << "skeleton has N=" << theta.size() << ", compressed file has N=" << compressed.n;
        throw std::invalid_argument(msg.str());
    }
    for (std::size_t j = 0; j < theta.size(); ++j) {
        const std::uint32_t index = compressed.indices[j];
        if (index >= compressed.centroids.size())
            throw io_error("decoded index out of range");
        theta.values[static_cast<Eigen::Index>(j)] = compressed.centroids[index];
    }
    return unflatten(theta, skeleton);
}

} // namespace wsc
