#include "stylestruct/model.hpp"

#include <cmath>
#include <random>

#include "stylestruct/error.hpp"
#include "stylestruct/scene.hpp"

namespace stylestruct {

Model Model::create(Scale scale, std::uint64_t seed) {
    Model m;
    m.scale_ = scale;
    for (NetworkKind k : kAllNetworks) {
        Net& n = m.net(k);
        n.spec = build_network(k, scale);
        n.params = init_params<float>(n.spec, splitmix64(seed ^ splitmix64(0x6e6574 + static_cast<std::uint64_t>(k))));
    }
    return m;
}

Model Model::clone() const {
    Model m;
    m.scale_ = scale_;
    m.codebook = codebook;
    for (NetworkKind k : kAllNetworks) {
        const Net& src = net(k);
        Net& dst = m.net(k);
        dst.spec = src.spec;
        dst.params = src.params.clone();
        dst.adam = src.adam;
    }
    return m;
}

void Model::zero_output_layer(NetworkKind k) {
    Net& n = net(k);
    const LayerSpec* last = nullptr;
    for (const auto& l : n.spec.layers)
        if (l.kind == LayerKind::FullyConnected) last = &l;
    if (!last) throw ConfigError(std::string(network_kind_name(k)) + " has no fully connected layer");
    for (const char* suffix : {".weight", ".bias"})
        for (auto& x : n.params.at(last->name + suffix).values()) x = 0.f;
}

Tensor<float> Model::structure_generate(const Tensor<float>& z, Mode mode) {
    Net& n = net(NetworkKind::StructureGenerator);
    return forward(n.spec, n.params, {{"z", z}}, mode);
}

Tensor<float> Model::structure_score(const Tensor<float>& normals) {
    Net& n = net(NetworkKind::StructureDiscriminator);
    return forward(n.spec, n.params, {{"normals", normals}}, Mode::Train);
}

Tensor<float> Model::style_generate(const Tensor<float>& normals, const Tensor<float>& z, Mode mode) {
    Net& n = net(NetworkKind::StyleGenerator);
    return forward(n.spec, n.params, {{"normals", normals}, {"z", z}}, mode);
}

Tensor<float> Model::style_score(const Tensor<float>& normals, const Tensor<float>& image) {
    Net& n = net(NetworkKind::StyleDiscriminator);
    return forward(n.spec, n.params, {{"normals", normals}, {"image", image}}, Mode::Train);
}

Tensor<float> Model::fcn_logits(const Tensor<float>& image, Mode mode) {
    Net& n = net(NetworkKind::Fcn);
    return forward(n.spec, n.params, {{"image", image}}, mode);
}

Tensor<float> Model::upsample_structure(const Tensor<float>& normals) const {
    const Index side = scale_.image_size();
    return resize_bilinear(normals, side, side);
}

void Model::store(Archive& a, NetworkKind k) const {
    const Net& n = net(k);
    const std::string p = network_kind_name(k);
    for (const auto& [name, t] : n.params.tensors) {
        a.put_f32(p + "/param/" + name, t.shape(), {t.values().begin(), t.values().end()});
        const auto mi = n.adam.m.find(name);
        const auto vi = n.adam.v.find(name);
        if (mi != n.adam.m.end() && vi != n.adam.v.end()) {
            a.put_f32(p + "/adam_m/" + name, t.shape(), mi->second);
            a.put_f32(p + "/adam_v/" + name, t.shape(), vi->second);
        }
    }
    for (const auto& [layer, s] : n.params.bn_stats) {
        const Shape sh{static_cast<Index>(s.mean.size())};
        a.put_f32(p + "/bn_mean/" + layer, sh, s.mean);
        a.put_f32(p + "/bn_var/" + layer, sh, s.var);
    }
    a.put_u64(p + "/adam_step", {n.adam.step});
    a.put_f64(p + "/adam_hyper", {4}, {n.adam.lr, n.adam.beta1, n.adam.beta2, n.adam.eps});
}

bool Model::stored(const Archive& a, NetworkKind k) const {
    return a.contains(std::string(network_kind_name(k)) + "/adam_step");
}

void Model::restore(const Archive& a, NetworkKind k) {
    const Net& cur = net(k);
    const std::string p = network_kind_name(k);
    NetworkParams<float> params = cur.params.clone();
    AdamState adam;
    auto fetch = [&](const std::string& field, const Shape& shape) {
        const auto& e = a.entry(field);
        if (e.shape != shape)
            throw DataError("checkpoint field '" + field + "' has shape " + shape_str(e.shape) + ", expected " +
                            shape_str(shape));
        return a.f32(field);
    };
    for (auto& [name, t] : params.tensors) {
        const auto v = fetch(p + "/param/" + name, t.shape());
        std::copy(v.begin(), v.end(), t.values().begin());
        const std::string mf = p + "/adam_m/" + name, vf = p + "/adam_v/" + name;
        if (a.contains(mf)) {
            adam.m[name] = fetch(mf, t.shape());
            adam.v[name] = fetch(vf, t.shape());
        }
    }
    for (auto& [layer, s] : params.bn_stats) {
        const Shape sh{static_cast<Index>(s.mean.size())};
        s.mean = fetch(p + "/bn_mean/" + layer, sh);
        s.var = fetch(p + "/bn_var/" + layer, sh);
    }
    adam.step = a.u64_scalar(p + "/adam_step");
    const auto h = a.f64(p + "/adam_hyper");
    if (h.size() != 4) throw DataError("checkpoint field '" + p + "/adam_hyper' must hold 4 values");
    adam.lr = h[0];
    adam.beta1 = h[1];
    adam.beta2 = h[2];
    adam.eps = h[3];
    for (const auto& name : a.names(p + "/param/"))
        if (!params.contains(name.substr(p.size() + 7)))
            throw DataError("checkpoint field '" + name + "' does not belong to " + p + " at scale " + scale_.str());
    Net& n = net(k);
    n.params = std::move(params);
    n.adam = std::move(adam);
}

void Model::store_codebook(Archive& a) const {
    if (!codebook) return;
    std::vector<double> v;
    for (const auto& c : codebook->centroids) v.insert(v.end(), c.begin(), c.end());
    a.put_f64("codebook", {static_cast<Index>(codebook->size()), 3}, v);
}

bool Model::restore_codebook(const Archive& a) {
    if (!a.contains("codebook")) return false;
    const auto v = a.f64("codebook");
    if (v.size() != static_cast<std::size_t>(kNormalClasses) * 3)
        throw DataError("checkpoint field 'codebook' must hold " + std::to_string(kNormalClasses) + " centroids");
    NormalCodebook cb;
    for (std::size_t i = 0; i < v.size(); i += 3) cb.centroids.push_back({v[i], v[i + 1], v[i + 2]});
    codebook = std::move(cb);
    return true;
}

Tensor<float> uniform_noise(Index n, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    std::vector<float> v(static_cast<std::size_t>(n * kNoiseDim));
    for (auto& x : v) x = static_cast<float>(u(rng));
    return Tensor<float>({n, kNoiseDim}, std::move(v));
}

std::uint64_t noise_seed(std::uint64_t seed, std::uint64_t phase, std::uint64_t iteration, std::uint64_t stream) {
    std::uint64_t h = splitmix64(seed ^ 0x6e6f697365ULL);
    h = splitmix64(h ^ phase);
    h = splitmix64(h ^ iteration);
    return splitmix64(h ^ stream);
}

}  // namespace stylestruct
