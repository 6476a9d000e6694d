#include "licb/suite.hpp"

#include <atomic>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <mutex>
#include <thread>

#include "json.hpp"
#include "licb/textures.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace licb::suite {

using namespace licb::diff;
using namespace licb::models;

std::string fmt(double v) {
  if (!std::isfinite(v)) v = v > 0 ? 999.0 : -999.0;
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.9g", v);
  return buf;
}

std::vector<Direction> default_directions() {
  return {{"rate", 1.0, 0.0},    {"rd2e-4", 1.0, 2e-4}, {"rd2e-3", 1.0, 2e-3},
          {"rd2e-2", 1.0, 2e-2}, {"rd2e-1", 1.0, 2e-1}, {"distortion", 0.0, 1.0}};
}

SuiteConfig SuiteConfig::from_json_file(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw SuiteError("cannot open config " + path);
  json j = json::parse(f, nullptr, true, true);
  SuiteConfig c;
  if (j.contains("images"))
    c.image_paths = j["images"].get<std::vector<std::string>>();
  c.synthetic_count = j.value("synthetic_count", c.synthetic_count);
  c.synthetic_size = j.value("synthetic_size", c.synthetic_size);
  if (j.contains("families"))
    for (const auto& s : j["families"])
      c.families.push_back(family_from_name(s.get<std::string>()));
  if (j.contains("lambdas")) c.lambdas = j["lambdas"].get<std::vector<double>>();
  if (j.contains("directions"))
    for (const auto& d : j["directions"])
      c.directions.push_back({d.at("name").get<std::string>(),
                              d.at("gamma_r").get<double>(),
                              d.at("gamma_d").get<double>()});
  c.epsilon = j.value("epsilon", c.epsilon);
  c.surface_steps = j.value("surface_steps", c.surface_steps);
  c.tau = j.value("tau", c.tau);
  c.train_steps = j.value("train_steps", c.train_steps);
  c.ladder_steps = j.value("ladder_steps", c.ladder_steps);
  c.train_batch = j.value("train_batch", c.train_batch);
  c.train_crop = j.value("train_crop", c.train_crop);
  c.train_lr = j.value("train_lr", c.train_lr);
  c.run_eci = j.value("run_eci", c.run_eci);
  c.run_ldmr = j.value("run_ldmr", c.run_ldmr);
  c.defend_at = j.value("defend_at", c.defend_at);
  c.at_iters = j.value("at_iters", c.at_iters);
  c.defend_online = j.value("defend_online", c.defend_online);
  c.online_iters = j.value("online_iters", c.online_iters);
  c.seed = j.value("seed", c.seed);
  c.workers = j.value("workers", c.workers);
  c.out_dir = j.value("out_dir", c.out_dir);

  if (c.families.empty())
    c.families = {Family::kFactorized, Family::kHyperS, Family::kHyperMc};
  if (c.lambdas.empty()) throw SuiteError("config: lambda list is empty");
  if (c.directions.empty()) c.directions = default_directions();
  for (const auto& p : c.image_paths)
    if (!fs::exists(p)) throw SuiteError("config: missing image " + p);
  return c;
}

std::string SuiteConfig::to_json() const {
  json j;
  j["images"] = image_paths;
  j["synthetic_count"] = synthetic_count;
  j["synthetic_size"] = synthetic_size;
  std::vector<std::string> fams;
  for (Family f : families) fams.push_back(family_name(f));
  j["families"] = fams;
  j["lambdas"] = lambdas;
  json dirs = json::array();
  for (const auto& d : directions)
    dirs.push_back({{"name", d.name}, {"gamma_r", d.gamma_r}, {"gamma_d", d.gamma_d}});
  j["directions"] = dirs;
  j["epsilon"] = epsilon;
  j["surface_steps"] = surface_steps;
  j["tau"] = tau;
  j["train_steps"] = train_steps;
  j["ladder_steps"] = ladder_steps;
  j["train_batch"] = train_batch;
  j["train_crop"] = train_crop;
  j["train_lr"] = train_lr;
  j["run_eci"] = run_eci;
  j["run_ldmr"] = run_ldmr;
  j["defend_at"] = defend_at;
  j["at_iters"] = at_iters;
  j["defend_online"] = defend_online;
  j["online_iters"] = online_iters;
  j["seed"] = seed;
  j["workers"] = workers;
  j["out_dir"] = out_dir;
  return j.dump(2);
}

namespace {

void save_raw_tensor(const std::string& path, const Tensor& t) {
  std::vector<uint8_t> out;
  out.insert(out.end(), {'L', 'I', 'C', 'T'});
  put_u32(out, static_cast<uint32_t>(t.shape().size()));
  for (int d : t.shape()) put_u32(out, static_cast<uint32_t>(d));
  for (float v : t.data()) put_f32(out, v);
  std::ofstream f(path, std::ios::binary);
  if (!f) throw SuiteError("cannot write " + path);
  f.write(reinterpret_cast<const char*>(out.data()),
          static_cast<std::streamsize>(out.size()));
}

Tensor load_raw_tensor(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw SuiteError("cannot open " + path);
  std::vector<uint8_t> b{std::istreambuf_iterator<char>(f),
                         std::istreambuf_iterator<char>()};
  if (b.size() < 8 || std::memcmp(b.data(), "LICT", 4) != 0)
    throw SuiteError("bad tensor file " + path);
  uint32_t rank = get_u32(b.data() + 4);
  ShapeVec shape;
  size_t pos = 8;
  for (uint32_t i = 0; i < rank; ++i, pos += 4)
    shape.push_back(static_cast<int>(get_u32(b.data() + pos)));
  std::vector<float> data(shape_numel(shape));
  for (size_t i = 0; i < data.size(); ++i, pos += 4)
    data[i] = get_f32(b.data() + pos);
  return Tensor::from_data(shape, std::move(data));
}

struct Task {
  std::string id;
  bool is_arda = false;
  int img = 0;
  int sub = 0;  // grid index, SRDA only
  int dir = 0;
};

struct Grid {
  struct Entry {
    Family family;
    int lambda_index;
    CompressionModel model;
  };
  std::vector<Entry> entries;
};

std::string image_id(const SuiteConfig& cfg, size_t i) {
  if (i < cfg.image_paths.size())
    return fs::path(cfg.image_paths[i]).stem().string();
  return "img" + std::to_string(i);
}

json report_to_json(const analysis::RDReport& r) {
  json j;
  j["family"] = family_name(r.family);
  j["lambda_index"] = r.lambda_index;
  j["direction"] = r.direction;
  j["image_id"] = r.image_id;
  j["r_pre"] = r.r_pre;
  j["r_post"] = r.r_post;
  j["d_pre"] = r.d_pre;
  j["d_post"] = r.d_post;
  j["delta_r"] = r.delta_r;
  j["delta_d"] = r.delta_d;
  j["psnr_pre"] = std::isfinite(r.psnr_pre) ? r.psnr_pre : 999.0;
  j["psnr_post"] = std::isfinite(r.psnr_post) ? r.psnr_post : 999.0;
  return j;
}

analysis::RDReport report_from_json(const json& j) {
  analysis::RDReport r;
  r.family = family_from_name(j.at("family").get<std::string>());
  r.lambda_index = j.at("lambda_index").get<int>();
  r.direction = j.at("direction").get<std::string>();
  r.image_id = j.at("image_id").get<std::string>();
  r.r_pre = j.at("r_pre").get<double>();
  r.r_post = j.at("r_post").get<double>();
  r.d_pre = j.at("d_pre").get<double>();
  r.d_post = j.at("d_post").get<double>();
  r.delta_r = j.at("delta_r").get<double>();
  r.delta_d = j.at("delta_d").get<double>();
  r.psnr_pre = j.at("psnr_pre").get<double>();
  r.psnr_post = j.at("psnr_post").get<double>();
  return r;
}

class Manifest {
 public:
  explicit Manifest(std::string path) : path_(std::move(path)) {
    std::ifstream f(path_);
    if (f) data_ = json::parse(f, nullptr, false);
    if (!data_.is_object()) data_ = json::object();
  }
  bool done(const std::string& id) const {
    auto it = data_.find(id);
    return it != data_.end() && (*it)["status"] == "done";
  }
  void record(const std::string& id, bool ok, const std::string& err = "") {
    std::lock_guard<std::mutex> lk(mu_);
    data_[id] = ok ? json{{"status", "done"}}
                   : json{{"status", "failed"}, {"error", err}};
    std::ofstream f(path_);
    f << data_.dump(1) << "\n";
  }

 private:
  std::string path_;
  json data_;
  std::mutex mu_;
};

int worker_count(const SuiteConfig& cfg) {
  if (const char* env = std::getenv("LICBENCH_WORKERS")) {
    int n = std::atoi(env);
    if (n > 0) return n;
  }
  return std::max(1, cfg.workers);
}

void write_trace_csv(const std::string& path,
                     const std::vector<optim::LossPoint>& trace) {
  std::ofstream f(path);
  f << "step,rate_bpp,distortion,total\n";
  for (const auto& p : trace)
    f << p.step << "," << fmt(p.rate_bpp) << "," << fmt(p.distortion) << ","
      << fmt(p.total) << "\n";
}

Grid build_grid(const SuiteConfig& cfg, const std::vector<Tensor>& images) {
  Grid grid;
  fs::create_directories(fs::path(cfg.out_dir) / "models");
  fs::create_directories(fs::path(cfg.out_dir) / "plots");
  for (Family fam : cfg.families) {
    const CompressionModel* prev = nullptr;
    for (size_t li = 0; li < cfg.lambdas.size(); ++li) {
      std::string ckpt = (fs::path(cfg.out_dir) / "models" /
                          (std::string(family_name(fam)) + "_" +
                           std::to_string(li) + ".licm"))
                             .string();
      if (fs::exists(ckpt)) {
        grid.entries.push_back(
            {fam, static_cast<int>(li), CompressionModel::load(ckpt)});
      } else {
        CompressionModel m =
            prev ? prev->clone()
                 : CompressionModel::create(fam, cfg.lambdas[li], cfg.seed);
        m.set_lambda(cfg.lambdas[li]);
        optim::TrainConfig tc;
        tc.steps = prev ? cfg.ladder_steps : cfg.train_steps;
        tc.batch = cfg.train_batch;
        tc.crop = cfg.train_crop;
        tc.lr = cfg.train_lr;
        tc.lr_final = cfg.train_lr * 0.1;
        tc.seed = cfg.seed + 31 * li + static_cast<uint64_t>(fam);
        auto trace = optim::train_rd(m, images, tc);
        m.save(ckpt);
        write_trace_csv((fs::path(cfg.out_dir) / "plots" /
                         (std::string("train_") + family_name(fam) + "_" +
                          std::to_string(li) + ".csv"))
                            .string(),
                        trace);
        grid.entries.push_back({fam, static_cast<int>(li), std::move(m)});
      }
      prev = &grid.entries.back().model;
    }
  }
  return grid;
}

}  // namespace

SuiteResult run_suite(const SuiteConfig& cfg) {
  fs::create_directories(cfg.out_dir);
  fs::create_directories(fs::path(cfg.out_dir) / "tasks");
  {
    std::ofstream f(fs::path(cfg.out_dir) / "config.json");
    f << cfg.to_json() << "\n";
  }

  std::vector<Tensor> images;
  std::vector<std::string> img_ids;
  if (!cfg.image_paths.empty()) {
    for (size_t i = 0; i < cfg.image_paths.size(); ++i) {
      images.push_back(io::load_image(cfg.image_paths[i]).pixels);
      img_ids.push_back(image_id(cfg, i));
    }
  } else {
    images = textures::make_dataset(cfg.synthetic_count, cfg.synthetic_size,
                                    cfg.seed);
    for (int i = 0; i < cfg.synthetic_count; ++i)
      img_ids.push_back(image_id(cfg, static_cast<size_t>(i)));
  }

  Grid grid = build_grid(cfg, images);

  std::vector<Task> tasks;
  for (size_t i = 0; i < images.size(); ++i) {
    for (size_t s = 0; s < grid.entries.size(); ++s)
      for (size_t d = 0; d < cfg.directions.size(); ++d) {
        Task t;
        t.id = "srda_" + img_ids[i] + "_" +
               family_name(grid.entries[s].family) + "_" +
               std::to_string(grid.entries[s].lambda_index) + "_" +
               cfg.directions[d].name;
        t.img = static_cast<int>(i);
        t.sub = static_cast<int>(s);
        t.dir = static_cast<int>(d);
        tasks.push_back(std::move(t));
      }
    for (size_t d = 0; d < cfg.directions.size(); ++d) {
      Task t;
      t.id = "arda_" + img_ids[i] + "_" + cfg.directions[d].name;
      t.is_arda = true;
      t.img = static_cast<int>(i);
      t.dir = static_cast<int>(d);
      tasks.push_back(std::move(t));
    }
  }

  Manifest manifest((fs::path(cfg.out_dir) / "manifest.json").string());
  SuiteResult res;
  res.total_tasks = static_cast<int>(tasks.size());

  std::vector<CompressionModel> flat;
  for (auto& e : grid.entries) flat.push_back(e.model.clone());

  std::atomic<size_t> next{0};
  std::mutex res_mu;
  auto run_one = [&](const Task& t) {
    attacks::AttackConfig ac;
    ac.gamma_r = cfg.directions[t.dir].gamma_r;
    ac.gamma_d = cfg.directions[t.dir].gamma_d;
    ac.epsilon = cfg.epsilon;
    ac.surface_steps = cfg.surface_steps;
    ac.tau = cfg.tau;
    const Tensor& x = images[t.img];
    json out;
    if (!t.is_arda) {
      const auto& e = grid.entries[t.sub];
      attacks::AttackResult ar = attacks::srda(e.model, x, ac);
      analysis::RDReport rep = analysis::perf_variation(e.model, x, ar.x_adv);
      rep.lambda_index = e.lambda_index;
      rep.direction = cfg.directions[t.dir].name;
      rep.image_id = img_ids[t.img];
      out["kind"] = "srda";
      out["report"] = report_to_json(rep);
      out["surface_steps"] = ar.surface_step_count;
      out["instability"] = ar.instability;
      save_raw_tensor(
          (fs::path(cfg.out_dir) / "tasks" / (t.id + ".xadv")).string(),
          ar.x_adv);
    } else {
      attacks::AttackResult ar = attacks::arda(flat, x, ac);
      analysis::RDReport mean;
      for (const auto& e : grid.entries) {
        analysis::RDReport r = analysis::perf_variation(e.model, x, ar.x_adv);
        mean.r_pre += r.r_pre;
        mean.r_post += r.r_post;
        mean.d_pre += r.d_pre;
        mean.d_post += r.d_post;
      }
      double n = static_cast<double>(grid.entries.size());
      mean.r_pre /= n;
      mean.r_post /= n;
      mean.d_pre /= n;
      mean.d_post /= n;
      mean.delta_r = mean.r_post - mean.r_pre;
      mean.delta_d = mean.d_post - mean.d_pre;
      mean.psnr_pre = analysis::psnr_from_mse(mean.d_pre);
      mean.psnr_post = analysis::psnr_from_mse(mean.d_post);
      mean.lambda_index = -1;
      mean.direction = cfg.directions[t.dir].name;
      mean.image_id = img_ids[t.img];
      out["kind"] = "arda";
      out["report"] = report_to_json(mean);
      out["surface_steps"] = ar.surface_step_count;
      out["instability"] = ar.instability;
      out["weight_clamped"] = ar.weight_clamped;
      save_raw_tensor(
          (fs::path(cfg.out_dir) / "tasks" / (t.id + ".xadv")).string(),
          ar.x_adv);
    }
    std::ofstream f(fs::path(cfg.out_dir) / "tasks" / (t.id + ".json"));
    f << out.dump(1) << "\n";
  };

  auto worker = [&]() {
    for (;;) {
      size_t i = next.fetch_add(1);
      if (i >= tasks.size()) return;
      const Task& t = tasks[i];
      if (manifest.done(t.id)) {
        std::lock_guard<std::mutex> lk(res_mu);
        ++res.skipped;
        continue;
      }
      try {
        run_one(t);
        manifest.record(t.id, true);
        std::lock_guard<std::mutex> lk(res_mu);
        ++res.completed;
      } catch (const std::exception& ex) {
        manifest.record(t.id, false, ex.what());
        std::lock_guard<std::mutex> lk(res_mu);
        ++res.failed;
        res.failures.push_back(t.id + ": " + ex.what());
      }
    }
  };

  int nw = worker_count(cfg);
  if (nw <= 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (int i = 0; i < nw; ++i) pool.emplace_back(worker);
    for (auto& th : pool) th.join();
  }

  // reports.csv in task order; missing artifacts of failed tasks are skipped
  std::vector<analysis::RDReport> srda_reports;
  {
    std::ofstream f(fs::path(cfg.out_dir) / "reports.csv");
    f << "kind,image,family,lambda_index,direction,r_pre,r_post,d_pre,d_post,"
         "delta_r,delta_d,psnr_pre,psnr_post,surface_steps,instability\n";
    for (const Task& t : tasks) {
      fs::path p = fs::path(cfg.out_dir) / "tasks" / (t.id + ".json");
      if (!fs::exists(p)) continue;
      std::ifstream tf(p);
      json j = json::parse(tf);
      analysis::RDReport r = report_from_json(j.at("report"));
      std::string fam =
          t.is_arda ? "GRID" : std::string(family_name(r.family));
      f << j.at("kind").get<std::string>() << "," << r.image_id << "," << fam
        << "," << r.lambda_index << "," << r.direction << "," << fmt(r.r_pre)
        << "," << fmt(r.r_post) << "," << fmt(r.d_pre) << "," << fmt(r.d_post)
        << "," << fmt(r.delta_r) << "," << fmt(r.delta_d) << ","
        << fmt(r.psnr_pre) << "," << fmt(r.psnr_post) << ","
        << j.at("surface_steps").get<int>() << ","
        << (j.at("instability").get<bool>() ? 1 : 0) << "\n";
      if (!t.is_arda) srda_reports.push_back(std::move(r));
    }
  }

  if (!srda_reports.empty()) {
    auto rows = analysis::aggregate(srda_reports);
    std::ofstream f(fs::path(cfg.out_dir) / "aggregates.csv");
    f << "group,n,mu_delta_r,mu_delta_d,sd_delta_r,sd_delta_d\n";
    for (const auto& row : rows)
      f << row.group << "," << row.n << "," << fmt(row.mu_dr) << ","
        << fmt(row.mu_dd) << "," << fmt(row.sd_dr) << "," << fmt(row.sd_dd)
        << "\n";
  }

  fs::path plots = fs::path(cfg.out_dir) / "plots";
  if (cfg.run_eci && !images.empty()) {
    std::ofstream f(plots / "eci.csv");
    f << "family,lambda_index,do_ys,do_yc,do_yh,bpp_total,bpp_y,bpp_z,"
         "delta_mean,scale\n";
    for (const auto& e : grid.entries) {
      std::string id = "srda_" + img_ids[0] + "_" + family_name(e.family) +
                       "_" + std::to_string(e.lambda_index) + "_" +
                       cfg.directions[0].name;
      fs::path xp = fs::path(cfg.out_dir) / "tasks" / (id + ".xadv");
      if (!fs::exists(xp)) continue;
      Tensor x_a = load_raw_tensor(xp.string());
      int nbits = e.family == Family::kHyperMc ? 3
                  : e.family == Family::kHyperS ? 2
                                                : 1;
      for (int mask = 0; mask < (1 << nbits); ++mask) {
        analysis::DoSet ds;
        ds.y_s = mask & 1;
        if (e.family == Family::kHyperMc) {
          ds.y_c = mask & 2;
          ds.y_h = mask & 4;
        } else if (e.family == Family::kHyperS) {
          ds.y_h = mask & 2;
        }
        analysis::EciReport rep = analysis::eci(e.model, images[0], x_a, ds);
        f << family_name(e.family) << "," << e.lambda_index << ","
          << ds.y_s << "," << ds.y_c << "," << ds.y_h << ","
          << fmt(rep.bpp_total) << "," << fmt(rep.bpp_y) << ","
          << fmt(rep.bpp_z) << ","
          << (rep.delta_mean ? fmt(*rep.delta_mean) : std::string("NA"))
          << "," << fmt(rep.scale) << "\n";
      }
    }
  }

  if (cfg.run_ldmr && !images.empty()) {
    for (const auto& e : grid.entries) {
      std::string id = "srda_" + img_ids[0] + "_" + family_name(e.family) +
                       "_" + std::to_string(e.lambda_index) + "_" +
                       cfg.directions[0].name;
      fs::path xp = fs::path(cfg.out_dir) / "tasks" / (id + ".xadv");
      if (!fs::exists(xp)) continue;
      Tensor x_a = load_raw_tensor(xp.string());
      analysis::MagnifyProfile prof =
          analysis::ldmr_cdmr(e.model, images[0], x_a);
      std::ofstream f(plots / (std::string("ldmr_") + family_name(e.family) +
                               "_" + std::to_string(e.lambda_index) + ".csv"));
      f << "layer,ldmr_interval,ldmr,cdmr\n";
      for (const auto& row : prof.rows)
        f << row.layer << "," << fmt(row.ldmr_interval) << "," << fmt(row.ldmr)
          << "," << fmt(row.cdmr) << "\n";
    }
  }

  if (cfg.defend_at && !grid.entries.empty()) {
    CompressionModel m = grid.entries[0].model.clone();
    optim::FinetuneConfig fc;
    fc.iters = cfg.at_iters;
    fc.attack_epsilon = cfg.epsilon;
    fc.seed = cfg.seed + 997;
    auto trace = optim::adversarial_finetune(m, images, fc);
    m.save((fs::path(cfg.out_dir) / "models" / "at_finetuned.licm").string());
    write_trace_csv((plots / "at_trajectory.csv").string(), trace);
  }

  if (cfg.defend_online && !grid.entries.empty() && !images.empty()) {
    const auto& e = grid.entries[0];
    std::string id = "srda_" + img_ids[0] + "_" + family_name(e.family) + "_" +
                     std::to_string(e.lambda_index) + "_" +
                     cfg.directions[0].name;
    fs::path xp = fs::path(cfg.out_dir) / "tasks" / (id + ".xadv");
    if (fs::exists(xp)) {
      optim::OnlineConfig oc;
      oc.iters = cfg.online_iters;
      auto orr = optim::online_update(e.model, load_raw_tensor(xp.string()), oc);
      std::ofstream f(plots / "online_trajectory.csv");
      f << "iter,best_loss\n";
      for (size_t i = 0; i < orr.best_trace.size(); ++i)
        f << i << "," << fmt(orr.best_trace[i]) << "\n";
    }
  }

  emit_plotdata(cfg);
  return res;
}

void emit_plotdata(const SuiteConfig& cfg) {
  fs::path tasks = fs::path(cfg.out_dir) / "tasks";
  fs::path plots = fs::path(cfg.out_dir) / "plots";
  fs::create_directories(plots);

  std::vector<std::string> img_ids;
  size_t nimg = cfg.image_paths.empty() ? cfg.synthetic_count
                                        : cfg.image_paths.size();
  for (size_t i = 0; i < nimg; ++i) img_ids.push_back(image_id(cfg, i));
  auto dirs = cfg.directions.empty() ? default_directions() : cfg.directions;
  auto fams = cfg.families;
  if (fams.empty())
    fams = {Family::kFactorized, Family::kHyperS, Family::kHyperMc};

  for (Family fam : fams) {
    std::ofstream f(plots / (std::string("rdcurve_") + family_name(fam) +
                             ".csv"));
    f << "lambda_index,bpp_pre,psnr_pre,bpp_post,psnr_post,direction\n";
    for (size_t li = 0; li < cfg.lambdas.size(); ++li)
      for (const auto& d : dirs) {
        double bp = 0, pp = 0, ba = 0, pa = 0;
        int n = 0;
        for (const auto& id : img_ids) {
          fs::path p = tasks / ("srda_" + id + "_" + family_name(fam) + "_" +
                                std::to_string(li) + "_" + d.name + ".json");
          if (!fs::exists(p)) continue;
          std::ifstream tf(p);
          json j = json::parse(tf);
          analysis::RDReport r = report_from_json(j.at("report"));
          bp += r.r_pre;
          pp += r.psnr_pre;
          ba += r.r_post;
          pa += r.psnr_post;
          ++n;
        }
        if (n == 0) continue;
        f << li << "," << fmt(bp / n) << "," << fmt(pp / n) << ","
          << fmt(ba / n) << "," << fmt(pa / n) << "," << d.name << "\n";
      }
  }
}

}  // namespace licb::suite
