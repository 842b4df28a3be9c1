#include "trimnet/config.hpp"

#include <cctype>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include "trimnet/errors.hpp"

namespace trimnet {
namespace {

std::string trim(const std::string& s) {
    std::size_t a = 0, b = s.size();
    while (a < b && std::isspace(static_cast<unsigned char>(s[a]))) ++a;
    while (b > a && std::isspace(static_cast<unsigned char>(s[b - 1]))) --b;
    return s.substr(a, b - a);
}

// "<a>x<b>" (or a single number, when pair_of_one) as a dimension pair.
std::pair<std::size_t, std::size_t> parse_dim_pair(const std::string& s, const std::string& what) {
    const auto parts = split(s, 'x');
    if (parts.size() == 1) return {parse_size(parts[0], what), parse_size(parts[0], what)};
    if (parts.size() != 2) throw ConfigError(what + ": expected <a>x<b>, got \"" + s + "\"");
    return {parse_size(parts[0], what), parse_size(parts[1], what)};
}

std::string dim_pair_string(std::pair<std::size_t, std::size_t> p) {
    return std::to_string(p.first) + "x" + std::to_string(p.second);
}

Layer parse_layer(const std::string& item, const std::vector<std::size_t>& incoming) {
    const auto parts = split(item, ':');
    const std::string& kind = parts[0];

    if (kind == "flatten") {
        if (parts.size() != 1) throw ConfigError("flatten takes no arguments: \"" + item + "\"");
        return FlattenLayer{};
    }

    if (kind == "maxpool") {
        if (parts.size() < 2 || parts.size() > 3)
            throw ConfigError("maxpool:<h>x<w>[:<sh>x<sw>] expected, got \"" + item + "\"");
        MaxPool2dLayer pool;
        pool.window = parse_dim_pair(parts[1], "maxpool window");
        pool.stride = parts.size() == 3 ? parse_dim_pair(parts[2], "maxpool stride") : pool.window;
        return pool;
    }

    if (kind == "dense") {
        if (parts.size() != 3)
            throw ConfigError("dense:<units>:<activation> expected, got \"" + item + "\"");
        if (incoming.size() != 1)
            throw ConfigError("dense layer needs a flat input, got shape " +
                              shape_to_string(incoming) + " (insert a flatten layer)");
        DenseLayer dense;
        const std::size_t units = parse_size(parts[1], "dense units");
        dense.weight = Tensor::zeros({units, incoming[0]});
        dense.bias = Tensor::zeros({units});
        dense.activation = activation_from_string(parts[2]);
        return dense;
    }

    if (kind == "conv") {
        if (parts.size() < 4 || parts.size() > 6)
            throw ConfigError("conv:<out>:<kh>x<kw>[:<sh>x<sw>[:<ph>x<pw>]]:<activation> expected, got \"" +
                              item + "\"");
        if (incoming.size() != 3)
            throw ConfigError("conv layer needs a [c, h, w] input, got shape " +
                              shape_to_string(incoming));
        Conv2dLayer conv;
        const std::size_t out = parse_size(parts[1], "conv output channels");
        const auto kernel = parse_dim_pair(parts[2], "conv kernel");
        if (parts.size() >= 5) conv.stride = parse_dim_pair(parts[3], "conv stride");
        if (parts.size() == 6) conv.padding = parse_dim_pair(parts[4], "conv padding");
        conv.weight = Tensor::zeros({out, incoming[0], kernel.first, kernel.second});
        conv.bias = Tensor::zeros({out});
        conv.activation = activation_from_string(parts.back());
        return conv;
    }

    throw ConfigError("unknown layer kind \"" + kind + "\" in \"" + item + "\"");
}

}  // namespace

std::map<std::string, std::string> parse_key_values(const std::string& text) {
    std::map<std::string, std::string> out;
    std::istringstream in(text);
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (const auto hash = line.find('#'); hash != std::string::npos) line.resize(hash);
        line = trim(line);
        if (line.empty()) continue;
        const auto eq = line.find('=');
        if (eq == std::string::npos)
            throw ConfigError("line " + std::to_string(line_no) + ": expected key = value, got \"" +
                              line + "\"");
        const std::string key = trim(line.substr(0, eq));
        if (key.empty()) throw ConfigError("line " + std::to_string(line_no) + ": empty key");
        out[key] = trim(line.substr(eq + 1));
    }
    return out;
}

std::map<std::string, std::string> load_key_values(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError(path + ": cannot open config file");
    std::ostringstream buf;
    buf << in.rdbuf();
    try {
        return parse_key_values(buf.str());
    } catch (const ConfigError& e) {
        throw ConfigError(path + ": " + e.what());
    }
}

std::string describe_architecture(const Network& net) {
    std::string out = "input:";
    for (std::size_t i = 0; i < net.input_shape.size(); ++i) {
        if (i > 0) out += 'x';
        out += std::to_string(net.input_shape[i]);
    }
    for (const Layer& layer : net.layers) {
        out += ';';
        std::visit(
            [&](const auto& l) {
                using T = std::decay_t<decltype(l)>;
                if constexpr (std::is_same_v<T, DenseLayer>) {
                    out += "dense:" + std::to_string(l.weight.dim(0)) + ":" +
                           to_string(l.activation);
                } else if constexpr (std::is_same_v<T, Conv2dLayer>) {
                    out += "conv:" + std::to_string(l.weight.dim(0)) + ":" +
                           dim_pair_string({l.weight.dim(2), l.weight.dim(3)}) + ":" +
                           dim_pair_string(l.stride) + ":" + dim_pair_string(l.padding) + ":" +
                           to_string(l.activation);
                } else if constexpr (std::is_same_v<T, MaxPool2dLayer>) {
                    out += "maxpool:" + dim_pair_string(l.window) + ":" + dim_pair_string(l.stride);
                } else {
                    out += "flatten";
                }
            },
            layer);
    }
    return out;
}

Network network_from_architecture(const std::string& descriptor) {
    const auto items = split(descriptor, ';');
    if (items.empty() || items[0].rfind("input:", 0) != 0)
        throw ConfigError("architecture must start with input:<dims>, got \"" + descriptor + "\"");

    Network net;
    for (const std::string& d : split(items[0].substr(6), 'x'))
        net.input_shape.push_back(parse_size(d, "input dimension"));
    if (net.input_shape.empty()) throw ConfigError("architecture: empty input shape");

    for (std::size_t i = 1; i < items.size(); ++i) {
        if (items[i].empty()) throw ConfigError("architecture: empty layer entry");
        const auto shapes = net.layers.empty()
                                ? std::vector<std::vector<std::size_t>>{}
                                : net.layer_output_shapes();
        const auto& incoming = net.layers.empty() ? net.input_shape : shapes.back();
        net.layers.push_back(parse_layer(items[i], incoming));
    }
    if (net.layers.empty()) throw ConfigError("architecture has no layers: \"" + descriptor + "\"");
    net.validate();
    return net;
}

std::pair<Dataset, Dataset> load_dataset_spec(const std::string& spec) {
    if (spec.rfind("mnist-idx:", 0) == 0) {
        const std::string dir = spec.substr(10);
        if (dir.empty()) throw ConfigError("mnist-idx: missing directory");
        return load_mnist_dir(dir);
    }
    if (spec.rfind("blobs:", 0) == 0 || spec == "blobs") {
        std::size_t classes = 3, dim = 2, train = 200, test = 100;
        double sep = 6.0;
        std::uint64_t seed = 1234;
        const std::string args = spec == "blobs" ? "" : spec.substr(6);
        if (!args.empty()) {
            for (const std::string& kv : split(args, ',')) {
                const auto eq = kv.find('=');
                if (eq == std::string::npos)
                    throw ConfigError("blobs: expected k=v, got \"" + kv + "\"");
                const std::string key = kv.substr(0, eq), value = kv.substr(eq + 1);
                if (key == "classes") classes = parse_size(value, "blobs classes");
                else if (key == "dim") dim = parse_size(value, "blobs dim");
                else if (key == "train") train = parse_size(value, "blobs train");
                else if (key == "test") test = parse_size(value, "blobs test");
                else if (key == "sep") sep = parse_double(value, "blobs sep");
                else if (key == "seed") seed = parse_uint64(value, "blobs seed");
                else throw ConfigError("blobs: unknown key \"" + key + "\"");
            }
        }
        return {synthetic_blobs(train, classes, dim, sep, seed),
                synthetic_blobs(test, classes, dim, sep, seed + 1)};
    }
    throw ConfigError("unknown dataset spec \"" + spec +
                      "\" (expected mnist-idx:<dir> or blobs:<k=v,...>)");
}

std::size_t parse_size(const std::string& s, const std::string& what) {
    const std::uint64_t v = parse_uint64(s, what);
    return static_cast<std::size_t>(v);
}

std::uint64_t parse_uint64(const std::string& s, const std::string& what) {
    try {
        std::size_t pos = 0;
        const unsigned long long v = std::stoull(s, &pos);
        if (pos != s.size()) throw std::invalid_argument("trailing characters");
        return v;
    } catch (const std::exception&) {
        throw ConfigError(what + ": \"" + s + "\" is not a non-negative integer");
    }
}

double parse_double(const std::string& s, const std::string& what) {
    try {
        std::size_t pos = 0;
        const double v = std::stod(s, &pos);
        if (pos != s.size()) throw std::invalid_argument("trailing characters");
        return v;
    } catch (const std::exception&) {
        throw ConfigError(what + ": \"" + s + "\" is not a number");
    }
}

std::vector<std::size_t> parse_index_list(const std::string& s, const std::string& what) {
    std::vector<std::size_t> out;
    if (s.empty()) return out;
    for (const std::string& item : split(s, ',')) out.push_back(parse_size(item, what));
    return out;
}

std::vector<std::string> split(const std::string& s, char delim) {
    std::vector<std::string> out;
    std::size_t start = 0;
    while (true) {
        const auto pos = s.find(delim, start);
        if (pos == std::string::npos) {
            out.push_back(s.substr(start));
            return out;
        }
        out.push_back(s.substr(start, pos - start));
        start = pos + 1;
    }
}

}  // namespace trimnet
