// Command-line front end: training, transfer, presets, serving, benchmarking.

#include <chrono>
#include <csignal>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <thread>

#include <CLI11.hpp>
#include <json.hpp>

#include "chromap/bench.h"
#include "chromap/checkpoint.h"
#include "chromap/pipeline.h"
#include "chromap/presets.h"
#include "chromap/raster.h"
#include "chromap/service.h"
#include "chromap/synth.h"
#include "chromap/trainer.h"

namespace {

using namespace chromap;

constexpr int kExitOk = 0;
constexpr int kExitFailure = 1;
constexpr int kExitUsage = 2;

// Failure carrying a machine-readable error code for stderr.
struct CliFailure {
  std::string code;
  std::string message;
};

[[noreturn]] void fail(std::string code, std::string message) { throw CliFailure{std::move(code), std::move(message)}; }

void report(const CliFailure& f) {
  std::cerr << nlohmann::json{{"error", f.code}, {"message", f.message}}.dump() << '\n';
}

std::string require_input(const std::string& value, const char* flag) {
  if (value.empty()) fail("missing_input", std::string("missing required input ") + flag);
  if (!std::filesystem::exists(value)) fail("missing_input", std::string(flag) + " does not exist: " + value);
  return value;
}

std::string require_output(const std::string& value, const char* flag) {
  if (value.empty()) fail("missing_input", std::string("missing required output ") + flag);
  return value;
}

std::shared_ptr<const StyleModel> load_model(const std::string& path) {
  require_input(path, "--checkpoint");
  return StyleModel::load(path);
}

Image read_image(const std::string& path, const char* flag) { return load_raster(require_input(path, flag)); }

std::pair<std::string, int> parse_host_port(const std::string& s) {
  const auto colon = s.rfind(':');
  if (colon == std::string::npos) fail("bad_argument", "--server must be host:port");
  return {s.substr(0, colon), std::stoi(s.substr(colon + 1))};
}

std::pair<int, int> parse_extent(const std::string& s) {
  const auto x = s.find('x');
  if (x == std::string::npos) fail("bad_argument", "--image must be WIDTHxHEIGHT");
  return {std::stoi(s.substr(0, x)), std::stoi(s.substr(x + 1))};
}

volatile std::sig_atomic_t g_stop = 0;
extern "C" void on_signal(int) { g_stop = 1; }

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Two-stage color style transfer with deterministic neural color mapping"};
  app.require_subcommand(1);

  std::string checkpoint, preset_path, out, in, content, style, server, name, data_dir, log_path, luts;
  int patch_size = kDefaultPatchSize;
  int k = 16, thumbnail_size = 64, image_size = 64, batch = 8, port = 8080, workers = 1, repeats = 5;
  int count = 200;
  std::uint64_t seed = 0;
  float lambda = 10.0f, lr = 3e-4f;
  std::int64_t steps = 2000;
  std::string host = "127.0.0.1", sizes = "256,512,1024", extent = "2048x2048";

  auto* train_cmd = app.add_subcommand("train", "Self-supervised training on a directory of PNG images");
  train_cmd->add_option("--data", data_dir, "Directory of training PNGs");
  train_cmd->add_option("--out", out, "Checkpoint to write");
  train_cmd->add_option("--log", log_path, "Per-step loss CSV");
  train_cmd->add_option("--luts", luts, "Directory of .cube files added to the perturbation bank");
  train_cmd->add_option("--k", k);
  train_cmd->add_option("--thumbnail-size", thumbnail_size);
  train_cmd->add_option("--image-size", image_size);
  train_cmd->add_option("--batch", batch);
  train_cmd->add_option("--seed", seed);
  train_cmd->add_option("--λ,--lambda", lambda, "Consistency loss weight");
  train_cmd->add_option("--steps", steps);
  train_cmd->add_option("--lr", lr);

  auto* transfer_cmd = app.add_subcommand("transfer", "Transfer the color style of one image onto another");
  transfer_cmd->add_option("--content", content);
  transfer_cmd->add_option("--style", style);
  transfer_cmd->add_option("--out", out);
  transfer_cmd->add_option("--checkpoint", checkpoint);
  transfer_cmd->add_option("--patch-size", patch_size);
  transfer_cmd->add_option("--server", server, "host:port of a parameter server; only thumbnails are sent");

  auto* normalize_cmd = app.add_subcommand("normalize", "Map an image into the normalized color space");
  normalize_cmd->add_option("--in", in);
  normalize_cmd->add_option("--out", out);
  normalize_cmd->add_option("--checkpoint", checkpoint);
  normalize_cmd->add_option("--patch-size", patch_size);

  auto* extract_cmd = app.add_subcommand("preset-extract", "Save the color style of an image as a preset");
  extract_cmd->add_option("--style", style);
  extract_cmd->add_option("--name", name);
  extract_cmd->add_option("--out", out);
  extract_cmd->add_option("--checkpoint", checkpoint);

  auto* apply_cmd = app.add_subcommand("preset-apply", "Stylize an image with a stored preset");
  apply_cmd->add_option("--preset", preset_path);
  apply_cmd->add_option("--in", in);
  apply_cmd->add_option("--out", out);
  apply_cmd->add_option("--checkpoint", checkpoint);
  apply_cmd->add_option("--patch-size", patch_size);

  auto* serve_cmd = app.add_subcommand("serve", "Run the parameter server");
  serve_cmd->add_option("--checkpoint", checkpoint, "Reloaded automatically when the file changes");
  serve_cmd->add_option("--host", host);
  serve_cmd->add_option("--port", port);
  int max_side = 256;
  serve_cmd->add_option("--max-thumbnail", max_side);

  auto* bench_cmd = app.add_subcommand("bench", "Patch-size sweep of the tiled color mapping kernel");
  bench_cmd->add_option("--sizes", sizes, "Comma-separated patch sizes");
  bench_cmd->add_option("--image", extent, "WIDTHxHEIGHT of the synthetic image");
  bench_cmd->add_option("--k", k);
  bench_cmd->add_option("--repeats", repeats);
  bench_cmd->add_option("--workers", workers);
  bench_cmd->add_option("--seed", seed);
  bench_cmd->add_option("--out", out, "CSV path (stdout when omitted)");

  auto* synth_cmd = app.add_subcommand("synth", "Write a synthetic training set");
  synth_cmd->add_option("--out", out);
  synth_cmd->add_option("--count", count);
  synth_cmd->add_option("--image-size", image_size);
  synth_cmd->add_option("--seed", seed);

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    report({"usage", e.what()});
    return kExitUsage;
  }

  try {
    const PipelineOptions pipeline{patch_size, 1};
    if (*train_cmd) {
      TrainConfig config;
      config.lambda = lambda;
      config.lr = lr;
      config.batch_size = batch;
      config.steps = steps;
      config.k = k;
      config.thumbnail_size = thumbnail_size;
      config.image_size = image_size;
      config.seed = seed;
      TrainOptions options;
      options.checkpoint_path = require_output(out, "--out");
      options.log_path = log_path;
      if (!luts.empty()) options.bank = load_cube_directory(require_input(luts, "--luts"));
      options.on_warning = [](const std::string& w) { std::cerr << "warning: " << w << '\n'; };
      options.on_step = [&](const LossReport& r) {
        if (r.step % 100 == 0 || r.step + 1 == config.steps) {
          std::cerr << "step " << r.step << " l_rec=" << r.l_rec << " l_con=" << r.l_con << " total=" << r.total
                    << '\n';
        }
      };
      train(config, require_input(data_dir, "--data"), options);
    } else if (*transfer_cmd) {
      const Image c = read_image(content, "--content");
      const Image s = read_image(style, "--style");
      Image result;
      if (!server.empty()) {
        auto [h, p] = parse_host_port(server);
        ServiceClient client(h, p);
        result = remote_transfer(client, c, s, patch_size);
      } else {
        result = transfer(*load_model(checkpoint), c, s, pipeline);
      }
      save_raster(result, require_output(out, "--out"));
    } else if (*normalize_cmd) {
      const auto model = load_model(checkpoint);
      const Normalized n = normalize(*model, read_image(in, "--in"), pipeline);
      save_raster(n.z.z.clamped(), require_output(out, "--out"));
    } else if (*extract_cmd) {
      const auto model = load_model(checkpoint);
      const Image s = read_image(style, "--style");
      const std::string preset_name = name.empty() ? std::filesystem::path(style).stem().string() : name;
      save_preset(extract_preset(*model, s, preset_name), require_output(out, "--out"));
    } else if (*apply_cmd) {
      const Preset preset = load_preset(require_input(preset_path, "--preset"));
      const auto model = load_model(checkpoint);
      const Image image = read_image(in, "--in");
      const std::string dest = require_output(out, "--out");
      if (preset.fingerprint != model->fingerprint()) {
        fail("fingerprint_mismatch", "preset " + preset.fingerprint.hex() + " was extracted under another model (" +
                                         model->fingerprint().hex() + ")");
      }
      const Normalized n = normalize(*model, image, pipeline);
      save_raster(stylize(*model, n.z, preset, pipeline), dest);
    } else if (*serve_cmd) {
      ParamService service(ServiceConfig{max_side});
      std::optional<std::filesystem::file_time_type> loaded_at;
      auto try_reload = [&] {
        if (checkpoint.empty() || !std::filesystem::exists(checkpoint)) return;
        const auto mtime = std::filesystem::last_write_time(checkpoint);
        if (loaded_at && *loaded_at == mtime) return;
        try {
          service.set_model(StyleModel::load(checkpoint));
          loaded_at = mtime;
          std::cerr << "loaded checkpoint " << checkpoint << " fingerprint "
                    << service.model()->fingerprint().hex() << '\n';
        } catch (const std::exception& e) {
          std::cerr << "warning: cannot load checkpoint: " << e.what() << '\n';
        }
      };
      try_reload();
      HttpServer http(service);
      const int bound = http.start(host, port);
      std::cerr << "listening on " << host << ':' << bound << '\n';
      std::signal(SIGINT, on_signal);
      std::signal(SIGTERM, on_signal);
      while (!g_stop) {
        std::this_thread::sleep_for(std::chrono::milliseconds(500));
        try_reload();
      }
      http.stop();
    } else if (*bench_cmd) {
      std::vector<int> patch_sizes;
      std::stringstream ss(sizes);
      for (std::string item; std::getline(ss, item, ',');) patch_sizes.push_back(std::stoi(item));
      auto [w, h] = parse_extent(extent);
      BenchOptions options;
      options.width = w;
      options.height = h;
      options.k = k;
      options.repeats = repeats;
      options.workers = workers;
      options.seed = seed;
      const auto records = bench_patch_sweep(options, patch_sizes);
      if (out.empty()) {
        write_bench_csv(std::cout, records, workers);
      } else {
        std::ofstream file(out);
        if (!file) fail("io", "cannot write " + out);
        write_bench_csv(file, records, workers);
      }
    } else if (*synth_cmd) {
      write_synthetic_dataset(require_output(out, "--out"), count, image_size, seed);
    }
  } catch (const CliFailure& f) {
    report(f);
    return kExitFailure;
  } catch (const FingerprintMismatchError& e) {
    report({"fingerprint_mismatch", e.what()});
    return kExitFailure;
  } catch (const CheckpointError& e) {
    report({"checkpoint", e.what()});
    return kExitFailure;
  } catch (const PresetError& e) {
    report({"preset", e.what()});
    return kExitFailure;
  } catch (const RasterError& e) {
    report({"image", e.what()});
    return kExitFailure;
  } catch (const std::exception& e) {
    report({"failure", e.what()});
    return kExitFailure;
  }
  return kExitOk;
}
