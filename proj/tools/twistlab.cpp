#include <CLI11.hpp>

#include <filesystem>
#include <fstream>
#include <iostream>

#include "twistlab/report.hpp"

using namespace twistlab;

namespace {

const std::vector<std::string> kCommands = {"forms",        "coeffs",      "eval",   "verify-basic", "verify-fe", "residues",
                                            "trivial-zeros", "count-zeros", "growth", "report"};

struct Flags {
    std::string command, form, alpha, target, out, points;
    std::vector<std::string> alphas, xgrid, range, T;
    std::string delta, tol, max_n, sigma, tmin, tmax;
    bool json = false, csv = false;
};

std::vector<real> reals(const std::vector<std::string>& v, const std::string& what) {
    std::vector<real> out;
    for (const std::string& s : v) out.push_back(parse_real(s, what));
    return out;
}

RunConfig build_config(const Flags& f) {
    RunConfig c;
    c.command = f.command;
    if (!f.form.empty()) c.form = f.form;
    if (!f.alpha.empty()) c.alpha = parse_alpha(f.alpha);
    for (const std::string& a : f.alphas) c.alphas.push_back(parse_alpha(a));
    if (!f.delta.empty()) c.delta = parse_real(f.delta, "delta");
    if (!f.xgrid.empty()) c.xgrid = reals(f.xgrid, "xgrid");
    if (!f.tol.empty()) {
        c.tol = parse_real(f.tol, "tol");
        if (!(c.tol > 0)) throw config_error("tol: must be positive");
    }
    if (!f.points.empty() && f.points != "default")
        for (const std::string& p : split(f.points, ',')) c.points.push_back(parse_point(p));
    if (!f.target.empty()) c.target = f.target;
    if (!f.max_n.empty()) c.max_n = parse_int(f.max_n, "max");
    if (!f.range.empty()) {
        auto r = reals(f.range, "range");
        if (r.size() != 2) throw config_error("range: expected LO,HI");
        c.range_lo = r[0];
        c.range_hi = r[1];
    }
    if (!f.T.empty()) c.T = reals(f.T, "T");
    if (!f.sigma.empty()) c.sigma = parse_real(f.sigma, "sigma");
    if (!f.tmin.empty()) c.tmin = parse_real(f.tmin, "tmin");
    if (!f.tmax.empty()) c.tmax = parse_real(f.tmax, "tmax");
    c.validate();
    return c;
}

std::vector<Suite> run(const RunConfig& cfg) {
    Session ses;
    const std::string& c = cfg.command;
    if (c == "report") return run_report(ses, cfg);
    if (c == "forms") return {run_forms(ses, cfg)};
    if (c == "coeffs") return {run_coeffs(ses, cfg)};
    if (c == "eval") return {run_eval(ses, cfg)};
    if (c == "verify-basic") return {run_verify_basic(ses, cfg)};
    if (c == "verify-fe") return {run_verify_fe(ses, cfg)};
    if (c == "residues") return {run_residues(ses, cfg)};
    if (c == "trivial-zeros") return {run_trivial_zeros(ses, cfg)};
    if (c == "count-zeros") return {run_count_zeros(ses, cfg)};
    return {run_growth(ses, cfg)};
}

// The command's own table when it has one, else one row per record.
std::string csv_payload(const std::vector<Suite>& suites, const std::string& command) {
    if (command == "report") {
        std::string s = csv_line({"identity", "log10_residual_bin", "count"});
        for (auto& row : residual_histogram(suites)) s += csv_line(row);
        return s;
    }
    if (suites.size() == 1 && !suites[0].table.empty()) {
        std::string s = csv_line(suites[0].table_header);
        for (auto& row : suites[0].table) s += csv_line(row);
        return s;
    }
    return records_csv(suites);
}

void write_file(const std::filesystem::path& p, const std::string& text) {
    std::ofstream os(p, std::ios::binary);
    if (!os) throw config_error("out: cannot write " + p.string());
    os << text;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Standard twists of half-integral weight L-functions: evaluation and verification"};
    Flags f;
    app.add_option("command", f.command, "Command to run")->required()->check(CLI::IsMember(kCommands));
    app.add_option("--form", f.form, "Preset name (ETA24, ETA8_CUBED, ETA2_4_8)");
    app.add_option("--alpha", f.alpha, "Twist parameter as an exact rational P/Q");
    app.add_option("--alphas", f.alphas, "Comma-separated alpha list for residues")->delimiter(',');
    app.add_option("--delta", f.delta, "Strip margin for verify-basic, in (0, 0.45]");
    app.add_option("--xgrid", f.xgrid, "Comma-separated regularization parameters X")->delimiter(',');
    app.add_option("--tol", f.tol, "Override the tolerance of the primary check");
    app.add_option("--points", f.points, "Points as RE:IM,RE:IM,... or 'default'");
    app.add_option("--target", f.target, "eval target: F, Fstar or twist");
    app.add_option("--max", f.max_n, "Largest n for coeffs");
    app.add_option("--range", f.range, "sigma range LO,HI for trivial-zeros")->delimiter(',');
    app.add_option("--T", f.T, "Comma-separated heights for count-zeros")->delimiter(',');
    app.add_option("--sigma", f.sigma, "Abscissa for growth");
    app.add_option("--tmin", f.tmin, "Smallest height for growth");
    app.add_option("--tmax", f.tmax, "Largest height for growth");
    app.add_option("--out", f.out, "Directory for COMMAND.jsonl and COMMAND.csv");
    app.add_flag("--json", f.json, "Print JSON lines");
    app.add_flag("--csv", f.csv, "Print CSV");
    app.set_config("--config", "", "Key-value file mirroring the flags; flags win");
    app.allow_config_extras(CLI::config_extras_mode::error);

    RunConfig cfg;
    try {
        app.parse(argc, argv);
        if (f.json && f.csv) throw config_error("--json and --csv are exclusive");
        cfg = build_config(f);
        if (!f.out.empty()) {
            std::error_code ec;
            std::filesystem::create_directories(f.out, ec);
            if (ec) throw config_error("out: " + ec.message());
        }
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return 2;
    } catch (const config_error& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return 2;
    }

    std::vector<Suite> suites;
    try {
        suites = run(cfg);
    } catch (const config_error& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error in " << cfg.command << ": " << e.what() << "\n";
        return 1;
    }

    const std::string jsonl = records_jsonl(suites);
    const std::string csv = csv_payload(suites, cfg.command);
    if (f.json)
        std::cout << jsonl;
    else if (f.csv)
        std::cout << csv;
    else
        std::cout << text_table(suites);
    if (!f.out.empty()) {
        std::filesystem::path dir(f.out);
        write_file(dir / (cfg.command + ".jsonl"), jsonl);
        write_file(dir / (cfg.command + ".csv"), cfg.command == "report" ? records_csv(suites) : csv);
        if (cfg.command == "report") write_file(dir / "residual_histogram.csv", csv);
    }

    int failed = 0;
    for (const Suite& s : suites)
        for (const Record& r : s.records)
            if (!r.pass) {
                if (failed < 20) std::cerr << "FAIL " << s.command << " " << r.identity << " " << r.where.dump() << "\n";
                ++failed;
            }
    if (failed) {
        std::cerr << failed << " check(s) above tolerance\n";
        return 1;
    }
    return 0;
}
