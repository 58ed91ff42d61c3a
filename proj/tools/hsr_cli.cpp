// hsr: dataset preparation, training, inference, evaluation and complexity
// reporting for the interpolation + CNN super-resolution models.
//
// Exit codes: 0 success, 1 runtime failure, 2 usage error.

#include <CLI11.hpp>

#include <cstdio>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>

#include "hsr/arch.hpp"
#include "hsr/data.hpp"
#include "hsr/interp.hpp"
#include "hsr/metrics.hpp"
#include "hsr/train.hpp"

namespace {

struct UsageError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

hsr::ArchName arch_or_usage(const std::string& name) {
    if (auto a = hsr::parse_arch_name(name)) return *a;
    throw UsageError("unknown architecture '" + name + "'");
}

hsr::Degradation degradation_or_usage(const std::string& name) {
    if (auto d = hsr::parse_degradation(name)) return *d;
    throw UsageError("unknown degradation '" + name + "'");
}

void check_scale(int scale) {
    if (scale != 2 && scale != 4) throw UsageError("--scale must be 2 or 4");
}

struct PrepareArgs {
    std::string images, degradations = "bicubic", out;
    int scale = 2;
    std::size_t stride = 4, limit = 0;
    std::uint64_t seed = 42;
};

int run_prepare(const PrepareArgs& a) {
    check_scale(a.scale);
    const auto degs = hsr::parse_degradation_list(a.degradations);
    if (!degs) throw UsageError("unknown degradation in '" + a.degradations + "'");
    if (a.stride == 0) throw UsageError("--stride must be at least 1");
    hsr::DatasetOptions opt;
    opt.image_dir = a.images;
    opt.degradations = *degs;
    opt.scale = a.scale;
    opt.stride = a.stride;
    opt.limit = a.limit;
    opt.seed = a.seed;
    const hsr::DatasetManifest m = hsr::build_dataset(opt, a.out);
    for (const auto& s : m.segments) std::cout << "segment " << hsr::to_string(s.degradation) << ": " << s.count << "\n";
    std::cout << "pairs: " << m.pairs << "\n";
    return 0;
}

struct TrainArgs {
    std::string arch, data, out, log, degradation;
    int scale = 2;
    std::size_t epochs = 100, batch = 64, patience = 10;
    std::uint64_t seed = 42;
    double lr = 1e-4, val_fraction = 0.05;
    std::optional<double> lr_final;
    bool strict_relu = false;
};

int run_train(const TrainArgs& a, std::size_t threads) {
    check_scale(a.scale);
    hsr::TrainConfig c;
    c.arch = arch_or_usage(a.arch);
    if (hsr::native_scale(c.arch) != a.scale)
        throw UsageError(a.arch + " is defined for --scale " + std::to_string(hsr::native_scale(c.arch)));
    if (a.batch == 0) throw UsageError("--batch must be at least 1");
    if (a.patience == 0) throw UsageError("--patience must be at least 1");
    if (a.lr < 0) throw UsageError("--lr must be non-negative");
    if (a.lr_final && *a.lr_final < 0) throw UsageError("--lr-final must be non-negative");
    c.scale = a.scale;
    c.final_relu = a.strict_relu;
    c.dataset = a.data;
    if (!a.degradation.empty()) c.degradation = degradation_or_usage(a.degradation);
    c.batch_size = a.batch;
    c.max_epochs = a.epochs;
    c.patience = a.patience;
    c.seed = a.seed;
    c.validation_fraction = a.val_fraction;
    c.adam.learning_rate = a.lr;
    c.final_learning_rate = a.lr_final;
    c.threads = threads;
    c.checkpoint = a.out;
    c.log = a.log.empty() ? a.out + ".log" : a.log;

    const hsr::TrainResult r = hsr::train(c, [](const hsr::EpochRecord& e) {
        std::printf("epoch %zu\ttrain %.6g\tval %.6g\t%.2fs\n", e.epoch, e.train_loss, e.val_loss, e.seconds);
        std::fflush(stdout);
    });
    hsr::save(r.model, a.out);
    std::printf("best epoch %zu (val %.6g); %zu train / %zu val pairs; saved %s\n", r.best_epoch, r.best_val_loss,
                r.train_pairs, r.val_pairs, a.out.c_str());
    return 0;
}

int run_super_resolve(const std::string& model_path, const std::string& in, const std::string& out) {
    const hsr::Model model = hsr::load(model_path);
    const hsr::Tensor image = hsr::load_image(in);
    hsr::save_image(hsr::forward(model, image), out);
    return 0;
}

struct EvalArgs {
    std::string model, baseline, images, degradation = "bicubic", report, kv;
    int scale = 2;
};

int run_evaluate(const EvalArgs& a) {
    check_scale(a.scale);
    if (a.model.empty() == a.baseline.empty()) throw UsageError("give exactly one of --model or --baseline");
    const hsr::Degradation deg = degradation_or_usage(a.degradation);
    hsr::Upscaler up;
    std::optional<hsr::Model> model;
    if (!a.model.empty()) {
        model = hsr::load(a.model);
        if (model->spec.scale != a.scale)
            throw std::runtime_error("model upscales by " + std::to_string(model->spec.scale) + ", not --scale " +
                                     std::to_string(a.scale));
        up = [&](const hsr::Tensor& lr) { return hsr::forward(*model, lr); };
    } else {
        const auto kind = hsr::parse_interp_kind(a.baseline);
        if (!kind) throw UsageError("unknown baseline '" + a.baseline + "'");
        up = [kind = *kind, s = a.scale](const hsr::Tensor& lr) { return hsr::upscale(lr, kind, s); };
    }
    const auto images = hsr::load_eval_images(a.images);
    if (images.empty()) throw std::runtime_error("no PNG/BMP images in " + a.images);
    const hsr::EvalReport report = hsr::evaluate(up, images, deg, a.scale);
    const std::string tsv = report.to_tsv();
    std::cout << tsv;
    if (!a.report.empty()) {
        std::ofstream f(a.report, std::ios::trunc);
        f << tsv;
        if (!f) throw std::runtime_error("cannot write " + a.report);
    }
    if (!a.kv.empty()) {
        std::ofstream f(a.kv, std::ios::trunc);
        f << report.to_key_values();
        if (!f) throw std::runtime_error("cannot write " + a.kv);
    }
    return 0;
}

int run_params(const std::string& arch, int scale, const std::string& dims) {
    const hsr::ArchName name = arch_or_usage(arch);
    if (hsr::native_scale(name) != scale)
        throw UsageError(arch + " is defined for --scale " + std::to_string(hsr::native_scale(name)));
    std::size_t h = 0, w = 0;
    char x = 0, extra = 0;
    std::istringstream in(dims);
    if (!(in >> h >> x >> w) || x != 'x' || h == 0 || w == 0 || (in >> extra))
        throw UsageError("--input-dims must look like HxW");
    const hsr::Model m = hsr::build(name, scale, 0);
    const hsr::ComplexityReport r = hsr::complexity(m, h, w);
    std::printf("arch: %s\nscale: %d\ninput: %zux%zu\n", arch.c_str(), scale, h, w);
    std::printf("layer\tn_in\ts\tn_out\tm\tparams\tmacs\n");
    for (std::size_t i = 0; i < r.layers.size(); ++i) {
        const auto& l = r.layers[i];
        std::printf("%zu\t%zu\t%zu\t%zu\t%zux%zu\t%llu\t%llu\n", i + 1, l.in_channels, l.kernel_size, l.out_filters,
                    l.out_height, l.out_width, static_cast<unsigned long long>(l.parameters),
                    static_cast<unsigned long long>(l.macs));
    }
    std::printf("total\t\t\t%zu\t\t%llu\t%llu\n", r.total_filters, static_cast<unsigned long long>(r.total_parameters),
                static_cast<unsigned long long>(r.total_macs));
    std::printf("depth: %zu\nfilters: %zu\nparameters: %llu\nmacs: %llu\n", r.depth, r.total_filters,
                static_cast<unsigned long long>(r.total_parameters), static_cast<unsigned long long>(r.total_macs));
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Hybrid interpolation + CNN single-image super-resolution"};
    app.require_subcommand(1, 1);
    std::size_t threads = 1;
    app.add_option("--threads", threads, "Worker thread cap")->check(CLI::PositiveNumber);

    PrepareArgs prep;
    auto* prepare = app.add_subcommand("prepare-data", "Build an LR/HR patch-pair dataset");
    prepare->add_option("--images", prep.images, "Directory of PNG/BMP training images")->required();
    prepare->add_option("--scale", prep.scale, "Upscale factor (2 or 4)")->required();
    prepare->add_option("--degradations", prep.degradations, "Comma list: bicubic,bilinear,nearest,pyramid[+blur]");
    prepare->add_option("--stride", prep.stride, "LR patch grid stride");
    prepare->add_option("--limit", prep.limit, "Max pairs per degradation (0 = all)");
    prepare->add_option("--seed", prep.seed, "Seed for subset selection");
    prepare->add_option("--out", prep.out, "Manifest path; the blob is written next to it as .hsrp")->required();

    TrainArgs tr;
    auto* train = app.add_subcommand("train", "Train a model on a patch dataset");
    train->add_option("--arch", tr.arch, "I2C, CI2, CB2SNN, I4C, I2CI2C, BicubicCNN, BilinearCNN, NNCNN")->required();
    train->add_option("--scale", tr.scale, "Upscale factor")->required();
    train->add_option("--data", tr.data, "Dataset manifest")->required();
    train->add_option("--epochs", tr.epochs, "Maximum epochs");
    train->add_option("--batch", tr.batch, "Mini-batch size");
    train->add_option("--patience", tr.patience, "Early-stop after this many epochs without improvement");
    train->add_option("--seed", tr.seed, "Initialization and shuffling seed");
    train->add_option("--lr", tr.lr, "Adam learning rate");
    train->add_option("--lr-final", tr.lr_final, "Cosine-decay the learning rate to this value by the last epoch");
    train->add_option("--val-fraction", tr.val_fraction, "Held-out validation fraction");
    train->add_option("--degradation", tr.degradation, "Train on one degradation segment only");
    train->add_flag("--strict-relu", tr.strict_relu, "Apply ReLU after the output layer too");
    train->add_option("--log", tr.log, "Per-epoch log (default: <out>.log)");
    train->add_option("--out", tr.out, "Model file")->required();

    std::string sr_model, sr_in, sr_out;
    auto* sr = app.add_subcommand("super-resolve", "Upscale one image with a trained model");
    sr->add_option("--model", sr_model, "Model file")->required();
    sr->add_option("--in", sr_in, "Input image")->required();
    sr->add_option("--out", sr_out, "Output image (.png or .bmp)")->required();

    EvalArgs ev;
    auto* eval = app.add_subcommand("evaluate", "PSNR/SSIM of a model or baseline on an image set");
    eval->add_option("--model", ev.model, "Model file");
    eval->add_option("--baseline", ev.baseline, "bicubic, bilinear or nearest");
    eval->add_option("--images", ev.images, "Directory of HR reference images")->required();
    eval->add_option("--scale", ev.scale, "Upscale factor")->required();
    eval->add_option("--degradation", ev.degradation, "How references are downsampled");
    eval->add_option("--report", ev.report, "Tab-separated report path");
    eval->add_option("--kv", ev.kv, "Key-value report path");

    std::string p_arch, p_dims = "16x16";
    int p_scale = 2;
    auto* params = app.add_subcommand("params", "Parameter and multiply-accumulate counts");
    params->add_option("--arch", p_arch, "Architecture")->required();
    params->add_option("--scale", p_scale, "Upscale factor")->required();
    params->add_option("--input-dims", p_dims, "LR input size HxW");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 2;
    }

    try {
        if (*prepare) return run_prepare(prep);
        if (*train) return run_train(tr, threads);
        if (*sr) return run_super_resolve(sr_model, sr_in, sr_out);
        if (*eval) return run_evaluate(ev);
        if (*params) return run_params(p_arch, p_scale, p_dims);
    } catch (const UsageError& e) {
        std::cerr << "usage error: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 2;
}
