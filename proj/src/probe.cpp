#include "irsr/probe/probe.hpp"

#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <set>

#include "irsr/core/container.hpp"
#include "irsr/losses/losses.hpp"
#include "irsr/synth/mask_codec.hpp"

namespace fs = std::filesystem;

namespace irsr::probe {

namespace {
constexpr uint64_t kProbeSceneStream = 0x70726f6265ULL;
constexpr uint64_t kProbeEpsStream = 0x7065707360ULL;
constexpr uint64_t kProbeDegStream = 0x7064656760ULL;
constexpr uint64_t kProbeSplitStream = 0x73706c6974ULL;
}  // namespace

Extraction extract_features(train::Trainer& trainer, const ProbeConfig& pc) {
    const train::TrainConfig& cfg = trainer.config();
    const int probe_t = pc.probe_t > 0 ? pc.probe_t : std::max(1, cfg.T / 4);

    Extraction ex;
    ex.width = cfg.width;
    codec::PatchCodec codec{cfg.patch_size};

    for (int s = 0; s < pc.num_scenes; ++s) {
        synth::SceneSpec spec;
        spec.width = spec.height = cfg.scene_size;
        spec.num_instances = cfg.num_instances;
        spec.seed = mix64(pc.seed, kProbeSceneStream, static_cast<uint64_t>(s));
        synth::SceneSample scene = synth::generate_scene(spec, cfg.patch_size);

        Rng deg_rng = Rng::derived(pc.seed, kProbeDegStream, static_cast<uint64_t>(s));
        degrade::DegradationConfig dcfg = degrade::sample_config(deg_rng, cfg.scale_1, cfg.scale_2, cfg.deg);
        Image lr = degrade::degrade_image(scene.image, dcfg);

        codec::Latent z_x = codec.encode(scene.image);
        Mat z0;
        if (cfg.ablation_case == 2) {
            z0 = z_x.tokens;
        } else {
            codec::Latent z_m = codec.encode(synth::encode_mask_rgb(scene.mask));
            z0 = codec::join(z_x, z_m).tokens;
        }

        Rng eps_rng = Rng::derived(pc.seed, kProbeEpsStream, static_cast<uint64_t>(s));
        Mat eps(z0.rows(), z0.cols());
        for (Eigen::Index i = 0; i < eps.rows(); ++i)
            for (Eigen::Index j = 0; j < eps.cols(); ++j)
                eps(i, j) = eps_rng.normal();

        diffusion::NoiseSchedule sched = diffusion::NoiseSchedule::make(cfg.T, cfg.schedule);
        Mat z_t = diffusion::forward_marginal(sched, z0, probe_t, eps);

        codec::Latent z_y = codec.encode(lr);
        Mat cond = codec::replicate_grid(z_y, cfg.scale_total()).tokens;

        std::vector<Mat> feats = trainer.model().layer_features(z_t, probe_t, cond);
        if (ex.per_layer.empty())
            ex.per_layer.assign(feats.size(), Mat());
        for (size_t l = 0; l < feats.size(); ++l) {
            Mat& dst = ex.per_layer[l];
            Eigen::Index old_rows = dst.rows();
            dst.conservativeResize(old_rows + feats[l].rows(), cfg.width);
            dst.bottomRows(feats[l].rows()) = feats[l];
        }

        std::vector<int32_t> assign = losses::assign_patch_instances(scene.mask, cfg.patch_size);
        for (size_t n = 0; n < assign.size(); ++n) {
            int32_t id = assign[n];
            int cat = 0;
            if (id > 0)
                cat = static_cast<int>(scene.instances[id - 1].category) + 1;
            ex.category.push_back(cat);
            ex.instance.push_back(id > 0 ? s * 32 + id : 0);
        }
    }
    return ex;
}

double linear_probe(const Mat& train_x, const std::vector<int>& train_y, const Mat& test_x,
                    const std::vector<int>& test_y, double ridge_lambda) {
    if (train_x.rows() != static_cast<Eigen::Index>(train_y.size()) ||
        test_x.rows() != static_cast<Eigen::Index>(test_y.size()))
        throw std::invalid_argument("linear_probe: label count does not match feature rows");

    std::set<int> classes(train_y.begin(), train_y.end());
    if (classes.size() < 2)
        throw ProbeDegenerateError("linear_probe: fewer than 2 classes in the training labels");

    std::map<int, int> class_index;
    int k = 0;
    for (int c : classes)
        class_index[c] = k++;

    // augment with a bias feature
    const Eigen::Index n = train_x.rows(), d = train_x.cols();
    Mat xa(n, d + 1);
    xa.leftCols(d) = train_x;
    xa.col(d).setOnes();

    Mat y = Mat::Zero(n, k);
    for (Eigen::Index i = 0; i < n; ++i)
        y(i, class_index.at(train_y[i])) = 1.0;

    Mat gram = xa.transpose() * xa;
    gram.diagonal().array() += ridge_lambda * static_cast<double>(n);
    Mat w = gram.ldlt().solve(xa.transpose() * y);

    Mat ta(test_x.rows(), d + 1);
    ta.leftCols(d) = test_x;
    ta.col(d).setOnes();
    Mat scores = ta * w;

    int correct = 0, counted = 0;
    for (Eigen::Index i = 0; i < scores.rows(); ++i) {
        auto it = class_index.find(test_y[i]);
        if (it == class_index.end())
            continue;  // class unseen at train time: always wrong, but count it
        Eigen::Index best;
        scores.row(i).maxCoeff(&best);
        correct += static_cast<int>(best) == it->second;
    }
    counted = static_cast<int>(scores.rows());
    return counted > 0 ? static_cast<double>(correct) / counted : 0.0;
}

namespace {

void split_indices(size_t n, double holdout_frac, uint64_t seed, std::vector<int>& train_idx,
                   std::vector<int>& test_idx) {
    std::vector<int> order(n);
    for (size_t i = 0; i < n; ++i)
        order[i] = static_cast<int>(i);
    Rng rng = Rng::derived(seed, kProbeSplitStream);
    for (size_t i = n; i > 1; --i)
        std::swap(order[i - 1], order[rng.next_below(i)]);
    size_t n_test = static_cast<size_t>(holdout_frac * n);
    test_idx.assign(order.begin(), order.begin() + n_test);
    train_idx.assign(order.begin() + n_test, order.end());
}

double probe_on_labels(const Mat& feats, const std::vector<int>& labels, const std::vector<int>& train_idx,
                       const std::vector<int>& test_idx, double ridge_lambda, bool* degenerate) {
    auto gather = [&](const std::vector<int>& idx, Mat& x, std::vector<int>& y) {
        x.resize(static_cast<Eigen::Index>(idx.size()), feats.cols());
        y.clear();
        for (size_t i = 0; i < idx.size(); ++i) {
            x.row(static_cast<Eigen::Index>(i)) = feats.row(idx[i]);
            y.push_back(labels[idx[i]]);
        }
    };
    Mat train_x, test_x;
    std::vector<int> train_y, test_y;
    gather(train_idx, train_x, train_y);
    gather(test_idx, test_x, test_y);
    try {
        return linear_probe(train_x, train_y, test_x, test_y, ridge_lambda);
    } catch (const ProbeDegenerateError&) {
        if (degenerate)
            *degenerate = true;
        return 1.0;  // a single class is trivially classified
    }
}

}  // namespace

ProbeReport probe_all_layers(train::Trainer& trainer, const ProbeConfig& pc) {
    Extraction ex = extract_features(trainer, pc);

    std::vector<int> train_idx, test_idx;
    split_indices(ex.category.size(), pc.holdout_frac, pc.seed, train_idx, test_idx);

    // instance discrimination is measured on foreground patches only
    std::vector<int> fg_train, fg_test;
    for (int i : train_idx)
        if (ex.instance[i] != 0)
            fg_train.push_back(i);
    for (int i : test_idx)
        if (ex.instance[i] != 0)
            fg_test.push_back(i);

    ProbeReport report;
    for (size_t l = 0; l < ex.per_layer.size(); ++l) {
        LayerProbeResult r;
        r.layer = static_cast<int>(l) + 1;
        r.accuracy_category =
            probe_on_labels(ex.per_layer[l], ex.category, train_idx, test_idx, pc.ridge_lambda, &r.degenerate);
        r.accuracy_instance =
            probe_on_labels(ex.per_layer[l], ex.instance, fg_train, fg_test, pc.ridge_lambda, &r.degenerate);
        report.layers.push_back(r);
    }
    return report;
}

double fisher_ratio(const Mat& x, const std::vector<int>& labels) {
    if (x.rows() != static_cast<Eigen::Index>(labels.size()))
        throw std::invalid_argument("fisher_ratio: label count mismatch");
    std::map<int, std::vector<int>> by_class;
    for (size_t i = 0; i < labels.size(); ++i)
        by_class[labels[i]].push_back(static_cast<int>(i));
    if (by_class.size() < 2)
        throw std::invalid_argument("fisher_ratio: need at least 2 classes");

    Eigen::RowVectorXd mu = x.colwise().mean();
    double between = 0.0, within = 0.0;
    const double n = static_cast<double>(x.rows());
    for (const auto& [cls, idx] : by_class) {
        Eigen::RowVectorXd mu_c = Eigen::RowVectorXd::Zero(x.cols());
        for (int i : idx)
            mu_c += x.row(i);
        mu_c /= static_cast<double>(idx.size());
        between += idx.size() / n * (mu_c - mu).squaredNorm();
        double w = 0.0;
        for (int i : idx)
            w += (x.row(i) - mu_c).squaredNorm();
        within += w / n;
    }
    return within > 1e-12 ? between / within : 0.0;
}

void export_features(train::Trainer& trainer, int layer, const ProbeConfig& pc, const std::string& prefix) {
    if (layer < 1 || layer > trainer.config().depth)
        throw std::invalid_argument("export_features: layer out of range");
    Extraction ex = extract_features(trainer, pc);
    const Mat& feats = ex.per_layer[layer - 1];

    TensorFile t;
    t.shape = {feats.rows(), feats.cols()};
    t.data.assign(feats.data(), feats.data() + feats.size());
    write_tensor_file(prefix + ".bin", t);

    std::ofstream csv(prefix + "_labels.csv", std::ios::binary);
    if (!csv)
        throw std::runtime_error("cannot write label csv: " + prefix + "_labels.csv");
    csv << "row,category,instance\n";
    for (size_t i = 0; i < ex.category.size(); ++i)
        csv << i << ',' << ex.category[i] << ',' << ex.instance[i] << '\n';
}

}  // namespace irsr::probe
