#include <fstream>
#include <iostream>
#include <map>
#include <sstream>

#include <CLI11.hpp>

#include "park/run.hpp"

namespace {

using park::RunConfig;

/// Options shared by every subcommand: --config plus one flag per key.
struct KeyFlags {
  std::string config_file;
  std::map<std::string, std::string> values;

  void attach(CLI::App* app) {
    app->add_option("--config", config_file, "key = value file; flags override it");
    for (const park::ConfigKey& k : park::config_keys())
      app->add_option("--" + k.name, values[k.name], k.help);
  }

  RunConfig resolve(CLI::App* app) const {
    RunConfig config;
    if (!config_file.empty()) park::apply_config_file(config, config_file);
    for (const auto& [name, value] : values)
      if (app->count("--" + name) > 0) park::set_key(config, name, value);
    return config;
  }
};

std::vector<park::RunMode> parse_modes(const std::string& text) {
  std::vector<park::RunMode> modes;
  std::stringstream in(text);
  std::string item;
  while (std::getline(in, item, ','))
    if (!item.empty()) modes.push_back(park::parse_run_mode(item));
  return modes;
}

void print_summary(const nlohmann::json& report) {
  nlohmann::json brief;
  brief["status"] = report["status"];
  if (report.contains("resolved")) brief["resolved"] = report["resolved"];
  if (report.contains("summary")) brief["summary"] = report["summary"];
  std::cout << brief.dump(2) << '\n';
}

int dispatch(int argc, char** argv) {
  CLI::App app{"Partitioned kernel ridge regression toolkit"};
  app.require_subcommand(1);

  KeyFlags synth_flags, train_flags, predict_flags, bench_flags, diag_flags;

  auto* synth = app.add_subcommand("synth", "generate a synthetic fixed-design dataset cache");
  std::string synth_out;
  synth_flags.attach(synth);
  synth->add_option("--out", synth_out, "dataset cache path")->required();

  auto* train = app.add_subcommand("train", "train, evaluate and report");
  train_flags.attach(train);

  auto* pred = app.add_subcommand("predict", "predict with a saved model");
  std::string model_in, pred_out;
  predict_flags.attach(pred);
  pred->add_option("--model", model_in, "model artifact")->required();
  pred->add_option("--out", pred_out, "write one prediction per line");

  auto* bench = app.add_subcommand("bench", "run several modes on the same data");
  std::string modes = "park,park-uni,dnc-v1,dnc-v2,falkon-global";
  bench_flags.attach(bench);
  bench->add_option("--modes", modes, "comma-separated run modes")->capture_default_str();

  auto* diag = app.add_subcommand("diagnose", "train ParK and evaluate the bound checks");
  diag_flags.attach(diag);

  auto* keys = app.add_subcommand("keys", "list config keys with defaults");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 2;
  }

  if (*keys) {
    const RunConfig defaults;
    for (const park::ConfigKey& k : park::config_keys())
      std::cout << k.name << " = " << k.get(defaults) << "    # " << k.help << '\n';
    return 0;
  }
  if (*synth) {
    RunConfig config = synth_flags.resolve(synth);
    config.validate();
    park::Dataset data = park::load_data(config);
    park::save_dataset(synth_out, data);
    std::cout << nlohmann::json{{"status", "ok"}, {"n", data.n()}, {"d", data.d()}, {"out", synth_out}}.dump()
              << '\n';
    return 0;
  }
  if (*train) {
    print_summary(park::run(train_flags.resolve(train)));
    return 0;
  }
  if (*pred) {
    RunConfig config = predict_flags.resolve(pred);
    config.validate();
    const park::Dataset data = park::load_data(config);
    const park::AnyModel model = park::deserialize_any(park::load_model_file(model_in));
    const Eigen::VectorXd p = park::predict(model, data.X);
    if (!pred_out.empty()) {
      std::ofstream out(pred_out);
      if (!out) throw park::InputError("cannot open '" + pred_out + "' for writing");
      out.precision(17);
      for (Eigen::Index i = 0; i < p.size(); ++i) out << p(i) << '\n';
    }
    std::cout << nlohmann::json{{"status", "ok"},
                                {"n", p.size()},
                                {"metric", park::to_string(config.metric)},
                                {"error", park::metrics::evaluate(config.metric, p, data.Y)}}
                     .dump()
              << '\n';
    return 0;
  }
  if (*bench) {
    const nlohmann::json out = park::bench(bench_flags.resolve(bench), parse_modes(modes));
    std::vector<nlohmann::json> runs(out["runs"].begin(), out["runs"].end());
    std::cout << park::table_csv(runs);
    return 0;
  }
  if (*diag) {
    RunConfig config = diag_flags.resolve(diag);
    if (config.mode != park::RunMode::park && config.mode != park::RunMode::park_uni)
      config.mode = park::RunMode::park;
    config.diagnostics = true;
    const nlohmann::json report = park::run(config);
    if (!report["resolved"]["data.has_truth"].get<bool>())
      throw park::InputError("diagnose needs a dataset with a known target function");
    nlohmann::json out = nlohmann::json::array();
    for (const auto& t : report["trials"])
      if (t.contains("diagnostics")) out.push_back(t["diagnostics"]);
    if (out.empty())
      throw park::InputError("diagnose: " + report["trials"][0].value("diagnostics_skipped", std::string("no diagnostics")));
    std::cout << out.dump(2) << '\n';
    return 0;
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  try {
    return dispatch(argc, argv);
  } catch (const park::NumericalError& e) {
    std::cerr << "numerical error: " << e.what() << '\n';
    return 3;
  } catch (const park::InputError& e) {
    std::cerr << "input error: " << e.what() << '\n';
    return 2;
  } catch (const park::Error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 3;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  }
}
