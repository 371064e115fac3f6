#include "cvsc/cli/commands.hpp"

#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <numbers>
#include <thread>

#include "cvsc/cli/csv.hpp"
#include "cvsc/smallsignal.hpp"

namespace cvsc::cli {

namespace fs = std::filesystem;

namespace {

int guarded(std::ostream& err, const std::function<int()>& body) {
  try {
    return body();
  } catch (const ParseError& e) {
    err << "error: " << e.what() << "\n";
    return kConfigError;
  } catch (const ValidationError& e) {
    err << "error: " << e.what() << "\n";
    return kConfigError;
  } catch (const ReferenceError& e) {
    err << "error: " << e.what() << "\n";
    return kConfigError;
  } catch (const dynamics::IntegrationError& e) {
    err << "error: " << e.what() << "\n";
    return kIntegrationError;
  } catch (const DivergenceError& e) {
    err << "error: " << e.what() << "\n";
    return kSolverError;
  } catch (const Error& e) {
    err << "error: " << e.what() << "\n";
    return kSolverError;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kConfigError;
  }
}

std::ofstream open_out(const RunConfig& run, const std::string& name) {
  fs::create_directories(run.out_dir);
  const fs::path p = fs::path(run.out_dir) / name;
  std::ofstream f(p, std::ios::binary);
  if (!f) throw ParseError({"cannot write '" + p.string() + "'"});
  return f;
}

std::string fixed(double v, int prec) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*f", prec, v);
  return buf;
}

std::string padded(const std::string& s, int width) {
  return s.size() >= static_cast<std::size_t>(width) ? s : std::string(width - s.size(), ' ') + s;
}

void write_series(const RunConfig& run, const SystemConfig& cfg, const dynamics::TimeSeries& ts,
                  const std::string& suffix) {
  for (const auto& u : cfg.units) {
    const std::string tag = "." + u.name;
    std::vector<int> cols;
    std::vector<std::string> header{"time"};
    for (std::size_t c = 0; c < ts.names.size(); ++c) {
      const auto& n = ts.names[c];
      if (n.size() > tag.size() && n.compare(n.size() - tag.size(), tag.size(), tag) == 0 &&
          n.rfind("_bus.", std::string::npos) == std::string::npos && n.rfind("v_bus", 0) != 0) {
        cols.push_back(static_cast<int>(c));
        header.push_back(n.substr(0, n.size() - tag.size()));
      }
    }
    auto f = open_out(run, "wpg_" + u.name + suffix);
    CsvWriter w(f);
    w.row(header);
    for (std::size_t k = 0; k < ts.samples(); ++k) {
      std::vector<std::string> row{format_number(ts.time[k])};
      for (int c : cols) row.push_back(format_number(ts.data[c][k]));
      w.row(row);
    }
  }
  std::vector<int> cols;
  std::vector<std::string> header{"time"};
  for (std::size_t c = 0; c < ts.names.size(); ++c) {
    const auto& n = ts.names[c];
    if (n.find("bus.") != std::string::npos || n == "v_fault" || n == "p_load" || n == "p_loss") {
      cols.push_back(static_cast<int>(c));
      header.push_back(n);
    }
  }
  auto f = open_out(run, "network" + suffix);
  CsvWriter w(f);
  w.row(header);
  for (std::size_t k = 0; k < ts.samples(); ++k) {
    std::vector<std::string> row{format_number(ts.time[k])};
    for (int c : cols) row.push_back(format_number(ts.data[c][k]));
    w.row(row);
  }
}

}  // namespace

SystemConfig load_system(const RunConfig& run) {
  if (run.system_path.empty()) throw ParseError({"--system is required"});
  SystemConfig cfg = parse_system_config(read_file(run.system_path));
  for (const auto& [k, v] : run.overrides) apply_override(cfg, k, v);
  return cfg;
}

unsigned sweep_threads() {
  unsigned n = std::max(1u, std::thread::hardware_concurrency());
  if (const char* env = std::getenv("CVSC_GRID_THREADS")) {
    char* end = nullptr;
    const long cap = std::strtol(env, &end, 10);
    if (end != env && cap > 0) n = std::min<unsigned>(n, static_cast<unsigned>(cap));
  }
  return n;
}

int cmd_powerflow(const RunConfig& run, std::ostream& out, std::ostream& err) {
  return guarded(err, [&] {
    const SystemConfig cfg = load_system(run);
    const auto sys = cfg.to_system();
    const auto pf = sys.solve_powerflow();
    out << "power flow converged in " << pf.iterations << " iterations, mismatch "
        << format_number(pf.mismatch) << " pu, slack bus " << pf.slack_bus << "\n\n";
    out << "  bus    |V| pu   angle deg\n";
    {
      auto f = open_out(run, "powerflow_buses.csv");
      CsvWriter w(f);
      w.row({"bus", "v_pu", "angle_deg"});
      for (std::size_t i = 0; i < pf.bus_ids.size(); ++i) {
        const auto v = pf.v(static_cast<Eigen::Index>(i));
        const double ang = std::arg(v) * 180.0 / std::numbers::pi;
        out << padded(std::to_string(pf.bus_ids[i]), 5) << padded(fixed(std::abs(v), 4), 10)
            << padded(fixed(ang, 2), 12) << "\n";
        w.row({std::to_string(pf.bus_ids[i]), format_number(std::abs(v)), format_number(ang)});
      }
    }
    out << "\n  wpg  bus      P MW    Q Mvar\n";
    auto f = open_out(run, "powerflow_generators.csv");
    CsvWriter w(f);
    w.row({"wpg", "bus", "p_mw", "q_mvar"});
    for (const auto& u : cfg.units) {
      const auto& g = pf.generator(u.bus);
      out << padded(u.name, 5) << padded(std::to_string(u.bus), 5) << padded(fixed(g.p / 1e6, 1), 10)
          << padded(fixed(g.q / 1e6, 1), 10) << "\n";
      w.row({u.name, std::to_string(u.bus), format_number(g.p / 1e6), format_number(g.q / 1e6)});
    }
    return kOk;
  });
}

int cmd_linearize(const RunConfig& run, std::ostream& out, std::ostream& err) {
  return guarded(err, [&] {
    const SystemConfig cfg = load_system(run);
    const auto sys = cfg.to_system();
    const auto pf = sys.solve_powerflow();
    const auto eq = dynamics::trim_equilibrium(sys, pf);
    const auto ss = smallsignal::finite_difference_jacobian(eq.model, eq.x);
    bool reliable = true;
    const auto modes = smallsignal::compute_modes(ss, &reliable);
    const auto rep = smallsignal::build_mode_report(modes, ss.labels);

    auto f = open_out(run, "modes.csv");
    CsvWriter w(f);
    w.row({"index", "re", "im", "freq_hz", "damping_ratio", "dominant_state", "participation_top3", "class"});
    int core_count = 0, unstable = 0;
    out << "index        real part     imag part   freq Hz   damping  dominant state\n";
    for (const auto& r : rep.rows) {
      w.row({r.index, format_number(r.eigenvalue.real()), format_number(r.eigenvalue.imag()),
             format_optional(r.frequency), format_optional(r.damping), r.dominant_state, r.participation_top3,
             r.extension ? "extension" : "core"});
      if (!r.extension) core_count += r.multiplicity;
      if (r.eigenvalue.real() >= 0.0) ++unstable;
      const std::string imag = r.frequency ? "+/-" + fixed(r.eigenvalue.imag(), 4) : "0";
      out << padded(r.index, 6) << padded(fixed(r.eigenvalue.real(), 4), 16) << padded(imag, 14)
          << padded(r.frequency ? fixed(*r.frequency, 4) : "-", 10)
          << padded(r.damping ? fixed(*r.damping, 4) : "-", 10) << "  " << r.dominant_state
          << (r.extension ? "  (extension)" : "") << "\n";
    }
    out << "\n" << ss.n() << " eigenvalues, " << core_count << " with a core dominant state, " << unstable
        << " row(s) with re >= 0\n";
    if (!reliable) out << "warning: participation factors flagged unreliable (near-degenerate eigenvectors)\n";
    return kOk;
  });
}

int cmd_simulate(const RunConfig& run, std::ostream& out, std::ostream& err) {
  return guarded(err, [&] {
    const SystemConfig cfg = load_system(run);
    if (run.scenario_path.empty()) throw ParseError({"--scenario is required"});
    dynamics::Scenario sc = parse_scenario(read_file(run.scenario_path));
    if (run.dt) sc.dt = *run.dt;
    dynamics::validate(sc);
    const auto sys = cfg.to_system();
    const auto pf = sys.solve_powerflow();
    const auto eq = dynamics::trim_equilibrium(sys, pf);
    dynamics::RunOptions opts;
    opts.waveforms = run.waveforms;

    dynamics::TimeSeries ts;
    std::string status = "complete";
    std::string diagnostic;
    try {
      ts = dynamics::run_scenario(eq.model, sc, eq.x, opts);
    } catch (const dynamics::ScenarioError& e) {
      ts = e.partial();
      status = "incomplete";
      diagnostic = e.what();
    }
    write_series(run, cfg, ts, status == "complete" ? ".csv" : ".partial.csv");

    auto f = open_out(run, "summary.txt");
    auto emit = [&](const std::string& k, const std::string& v) {
      f << k << " = " << v << "\n";
      out << k << " = " << v << "\n";
    };
    emit("status", status);
    if (!diagnostic.empty()) emit("diagnostic", diagnostic);
    emit("samples", std::to_string(ts.samples()));
    emit("t_final", ts.samples() ? format_number(ts.time.back()) : "0");
    if (ts.samples() > 0) {
      const auto s = dynamics::summarize(sys, sc, ts);
      emit("sync_residual", format_number(s.sync_residual));
      emit("delta_p_e_total_mw", format_number(s.delta_p_e_total / 1e6));
      emit("delta_p_load_mw", format_number(s.delta_p_load / 1e6));
      emit("delta_p_loss_mw", format_number(s.delta_p_loss / 1e6));
      for (const auto& u : s.units) {
        const std::string p = "wpg." + u.name + ".";
        emit(p + "v_dc_initial", format_number(u.v_dc_initial));
        emit(p + "v_dc_peak", format_number(u.v_dc_peak));
        emit(p + "v_dc_min", format_number(u.v_dc_min));
        emit(p + "v_dc_final", format_number(u.v_dc_final));
        emit(p + "p_e_initial_mw", format_number(u.p_e_initial / 1e6));
        emit(p + "p_e_min_mw", format_number(u.p_e_min / 1e6));
        emit(p + "p_e_max_mw", format_number(u.p_e_max / 1e6));
        emit(p + "p_e_final_mw", format_number(u.p_e_final / 1e6));
        emit(p + "settling_time_s", format_number(u.settling_time));
        emit(p + "energy_residual_j", format_number(u.energy_residual));
        emit(p + "energy_residual_ratio", format_number(u.energy_ratio));
      }
    }
    if (status != "complete") {
      err << "error: " << diagnostic << "\n";
      return kIntegrationError;
    }
    return kOk;
  });
}

int cmd_ka_sweep(const RunConfig& run, std::ostream& out, std::ostream& err) {
  return guarded(err, [&] {
    const SystemConfig cfg = load_system(run);
    if (run.ka_values.empty()) throw ParseError({"--ka needs at least one value"});
    const auto sys = cfg.to_system();
    smallsignal::KaSweepOptions opt;
    opt.points = run.ka_points;
    opt.threads = run.threads;
    const auto res = smallsignal::ka_sweep(sys, run.ka_values, opt);

    auto f = open_out(run, "ka_sweep.csv");
    CsvWriter w(f);
    std::vector<std::string> header{"omega_rad_s"};
    for (const auto& c : res.curves) {
      char buf[48];
      std::snprintf(buf, sizeof buf, "k_a=%g", c.k_a);
      header.emplace_back(buf);
    }
    w.row(header);
    for (std::size_t k = 0; k < res.omega.size(); ++k) {
      std::vector<std::string> row{format_number(res.omega[k])};
      for (const auto& c : res.curves) row.push_back(format_number(c.magnitude[k]));
      w.row(row);
    }
    int skipped = 0;
    for (const auto& c : res.curves) {
      if (!c.ok) {
        err << "warning: " << c.warning << "\n";
        ++skipped;
        continue;
      }
      out << "k_a = " << c.k_a << ": |G| at " << format_number(res.omega.front()) << " rad/s = "
          << format_number(c.magnitude.front()) << ", at " << format_number(res.omega.back())
          << " rad/s = " << format_number(c.magnitude.back()) << "\n";
    }
    return skipped == static_cast<int>(res.curves.size()) ? static_cast<int>(kSolverError) : static_cast<int>(kOk);
  });
}

int cmd_validate(const RunConfig& run, std::ostream& out, std::ostream& err) {
  return guarded(err, [&] {
    const SystemConfig cfg = load_system(run);
    out << run.system_path << ": ok (" << cfg.network.buses.size() << " buses, " << cfg.network.branches.size()
        << " branches, " << cfg.units.size() << " WPGs)\n";
    if (!run.scenario_path.empty()) {
      const auto sc = parse_scenario(read_file(run.scenario_path));
      out << run.scenario_path << ": ok (" << sc.events.size() << " events)\n";
    }
    return kOk;
  });
}

}  // namespace cvsc::cli
