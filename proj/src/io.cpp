#include "haad/io.hpp"

#include <array>
#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <istream>
#include <iterator>
#include <limits>
#include <ostream>
#include <sstream>

#include <json.hpp>

#include "haad/error.hpp"

namespace haad::io {
namespace {

using nlohmann::json;

void put_u32(std::ostream& os, std::uint32_t v) {
    const std::array<char, 4> b{static_cast<char>(v & 0xff), static_cast<char>((v >> 8) & 0xff),
                                static_cast<char>((v >> 16) & 0xff), static_cast<char>((v >> 24) & 0xff)};
    os.write(b.data(), 4);
}

std::uint32_t get_u32(const unsigned char* b) {
    return static_cast<std::uint32_t>(b[0]) | static_cast<std::uint32_t>(b[1]) << 8 |
           static_cast<std::uint32_t>(b[2]) << 16 | static_cast<std::uint32_t>(b[3]) << 24;
}

std::uint32_t checked_u32(std::size_t v, const char* what) {
    if (v > std::numeric_limits<std::uint32_t>::max()) {
        throw IoError(std::string("feature file: ") + what + " does not fit in 32 bits");
    }
    return static_cast<std::uint32_t>(v);
}

bool read_exact(std::istream& is, char* dst, std::size_t n) {
    is.read(dst, static_cast<std::streamsize>(n));
    return static_cast<std::size_t>(is.gcount()) == n;
}

json mat_to_json(const num::Mat& m) {
    return json{{"rows", m.rows()}, {"cols", m.cols()}, {"data", std::vector<double>(m.span().begin(), m.span().end())}};
}

num::Mat mat_from_json(const json& j, const std::string& name) {
    const auto rows = j.at("rows").get<std::size_t>();
    const auto cols = j.at("cols").get<std::size_t>();
    auto data = j.at("data").get<std::vector<double>>();
    if (data.size() != rows * cols) {
        throw IoError("checkpoint: parameter " + name + " has " + std::to_string(data.size()) + " values for " +
                      std::to_string(rows) + "x" + std::to_string(cols));
    }
    return num::Mat(rows, cols, std::move(data));
}

}  // namespace

void write_features(std::ostream& os, const Dataset& data) {
    data.validate();
    os.write(kFeatureMagic, sizeof kFeatureMagic);
    put_u32(os, checked_u32(data.h_p, "h_p"));
    put_u32(os, checked_u32(data.w_p, "w_p"));
    put_u32(os, checked_u32(data.d_in, "d_in"));
    put_u32(os, checked_u32(data.size(), "sample count"));
    os.write(reinterpret_cast<const char*>(data.labels.data()), static_cast<std::streamsize>(data.labels.size()));
    for (const auto& x : data.features) {
        for (double v : x.span()) {
            if (std::abs(v) > static_cast<double>(std::numeric_limits<float>::max())) {
                throw IoError("feature file: value out of 32-bit float range");
            }
            put_u32(os, std::bit_cast<std::uint32_t>(static_cast<float>(v)));
        }
    }
}

void write_features_file(const std::string& path, const Dataset& data) {
    std::ofstream os(path, std::ios::binary);
    if (!os) throw IoError("cannot open '" + path + "' for writing");
    write_features(os, data);
    os.flush();
    if (!os) throw IoError("write failed for '" + path + "'");
}

Dataset read_features(std::istream& is) {
    char magic[8];
    if (!read_exact(is, magic, 8)) throw IoError("feature file: truncated header (missing magic)");
    if (std::memcmp(magic, kFeatureMagic, 8) != 0) throw IoError("feature file: bad magic (expected HAADFT01)");
    unsigned char hdr[16];
    if (!read_exact(is, reinterpret_cast<char*>(hdr), 16)) throw IoError("feature file: truncated header");
    Dataset d;
    d.h_p = get_u32(hdr);
    d.w_p = get_u32(hdr + 4);
    d.d_in = get_u32(hdr + 8);
    const std::size_t count = get_u32(hdr + 12);
    d.labels.resize(count);
    if (!read_exact(is, reinterpret_cast<char*>(d.labels.data()), count)) {
        throw IoError("feature file: truncated label block");
    }
    for (std::size_t i = 0; i < count; ++i) {
        const auto y = d.labels[i];
        if (y != kLabelReal && y != kLabelFake && y != kLabelUnlabeled) {
            throw IoError("feature file: invalid label " + std::to_string(y) + " for sample " + std::to_string(i));
        }
    }
    const std::size_t per = d.h_p * d.w_p * d.d_in;
    std::vector<unsigned char> buf(per * 4);
    d.features.reserve(count);
    for (std::size_t s = 0; s < count; ++s) {
        if (!read_exact(is, reinterpret_cast<char*>(buf.data()), buf.size())) {
            throw IoError("feature file: truncated payload at sample " + std::to_string(s) + " of " +
                          std::to_string(count));
        }
        num::Mat x(d.h_p * d.w_p, d.d_in);
        auto out = x.span();
        for (std::size_t k = 0; k < per; ++k) {
            const float f = std::bit_cast<float>(get_u32(buf.data() + 4 * k));
            if (!std::isfinite(f)) {
                throw IoError("feature file: non-finite value in sample " + std::to_string(s) + " at offset " +
                              std::to_string(k));
            }
            out[k] = static_cast<double>(f);
        }
        d.features.push_back(std::move(x));
    }
    if (is.peek() != std::char_traits<char>::eof()) throw IoError("feature file: trailing bytes after payload");
    return d;
}

Dataset read_features_file(const std::string& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw IoError("cannot open '" + path + "' for reading");
    try {
        return read_features(is);
    } catch (const IoError& e) {
        throw IoError(path + ": " + e.what());
    }
}

std::string checkpoint_to_json(const Checkpoint& ck) {
    json params = json::object();
    for (const auto& p : ck.model.parameters()) params[p.name] = mat_to_json(*p.value);
    const auto& m = ck.model;
    json j{
        {"format", "haad-checkpoint"},
        {"version", kCheckpointVersion},
        {"seed", ck.seed},
        {"grid", {{"h_p", ck.h_p}, {"w_p", ck.w_p}}},
        {"shape", {{"d_in", m.shape.d_in}, {"d_phy", m.shape.d_phy}, {"mass_hidden", m.shape.mass_hidden}}},
        {"mass_epsilon", m.mass.epsilon},
        {"potential", {{"lambda_geo", m.potential.lambda_geo}, {"lambda_photo", m.potential.lambda_photo}}},
        {"rollout",
         {{"steps", ck.rollout.steps},
          {"eta", ck.rollout.eta},
          {"integrator", dyn::to_string(ck.rollout.integrator)},
          {"mass_mode", dyn::to_string(ck.rollout.mass_mode)}}},
        {"loss", {{"lambda", ck.loss.lambda}, {"gamma", ck.loss.gamma}}},
        {"parameters", params},
    };
    return j.dump(1) + "\n";
}

Checkpoint checkpoint_from_json(const std::string& text) {
    try {
        const json j = json::parse(text);
        if (j.at("format").get<std::string>() != "haad-checkpoint") throw IoError("checkpoint: unknown format tag");
        if (j.at("version").get<int>() != kCheckpointVersion) {
            throw IoError("checkpoint: unsupported version " + std::to_string(j.at("version").get<int>()));
        }
        Checkpoint ck;
        ck.seed = j.at("seed").get<std::uint64_t>();
        ck.h_p = j.at("grid").at("h_p").get<std::size_t>();
        ck.w_p = j.at("grid").at("w_p").get<std::size_t>();
        auto& m = ck.model;
        m.shape.d_in = j.at("shape").at("d_in").get<std::size_t>();
        m.shape.d_phy = j.at("shape").at("d_phy").get<std::size_t>();
        m.shape.mass_hidden = j.at("shape").at("mass_hidden").get<std::size_t>();
        m.mass.epsilon = j.at("mass_epsilon").get<double>();
        m.potential.lambda_geo = j.at("potential").at("lambda_geo").get<double>();
        m.potential.lambda_photo = j.at("potential").at("lambda_photo").get<double>();
        ck.rollout.steps = j.at("rollout").at("steps").get<std::size_t>();
        ck.rollout.eta = j.at("rollout").at("eta").get<double>();
        ck.rollout.integrator = dyn::parse_integrator(j.at("rollout").at("integrator").get<std::string>());
        ck.rollout.mass_mode = dyn::parse_mass_mode(j.at("rollout").at("mass_mode").get<std::string>());
        ck.loss.lambda = j.at("loss").at("lambda").get<double>();
        ck.loss.gamma = j.at("loss").at("gamma").get<double>();

        const potential::PotentialModel ref = potential::init_model(m.shape, 0);
        const auto ref_params = ref.parameters();
        const json& params = j.at("parameters");
        if (params.size() != ref_params.size()) throw IoError("checkpoint: unexpected parameter count");
        auto dst = m.parameters();
        for (std::size_t k = 0; k < dst.size(); ++k) {
            num::Mat v = mat_from_json(params.at(dst[k].name), dst[k].name);
            if (!v.same_shape(*ref_params[k].value)) {
                throw IoError("checkpoint: parameter " + dst[k].name + " is " + v.shape_str() + ", shape implies " +
                              ref_params[k].value->shape_str());
            }
            *dst[k].value = std::move(v);
        }
        return ck;
    } catch (const json::exception& e) {
        throw IoError(std::string("checkpoint: malformed document: ") + e.what());
    } catch (const ConfigError& e) {
        throw IoError(std::string("checkpoint: ") + e.what());
    }
}

void save_checkpoint(const std::string& path, const Checkpoint& ck) {
    std::ofstream os(path);
    if (!os) throw IoError("cannot open '" + path + "' for writing");
    os << checkpoint_to_json(ck);
    if (!os) throw IoError("write failed for '" + path + "'");
}

Checkpoint load_checkpoint(const std::string& path) {
    std::ifstream is(path);
    if (!is) throw IoError("cannot open '" + path + "' for reading");
    std::stringstream ss;
    ss << is.rdbuf();
    try {
        return checkpoint_from_json(ss.str());
    } catch (const IoError& e) {
        throw IoError(path + ": " + e.what());
    }
}

}  // namespace haad::io
