#include "demcl/config.hpp"

#include <fstream>
#include <sstream>

namespace demcl {

PipelineConfig desk_config() {
    PipelineConfig cfg;
    cfg.radar.carrier_hz = 24e9;
    cfg.radar.bandwidth_hz = 250e6;
    cfg.radar.chirp_s = 1e-3;
    cfg.radar.samples_per_chirp = 64;
    cfg.radar.chirps_per_frame = 32;
    cfg.radar.frame_rate = 15.0;
    cfg.duration_s = 60.0;

    PedestrianProfile p0;
    p0.name = "ped0";
    p0.label = 0;
    p0.base_range_m = 5.0;
    p0.torso_speed_mps = 0.6;
    p0.gait_hz = 0.8;
    p0.limb_amp_mps = 0.9;
    p0.rng_seed = 101;
    PedestrianProfile p1 = p0;
    p1.name = "ped1";
    p1.label = 1;
    p1.base_range_m = 7.0;
    p1.torso_speed_mps = 1.0;
    p1.gait_hz = 1.25;
    p1.limb_amp_mps = 1.2;
    p1.rng_seed = 102;
    PedestrianProfile p2 = p0;
    p2.name = "ped2";
    p2.label = 2;
    p2.base_range_m = 9.0;
    p2.torso_speed_mps = 1.4;
    p2.gait_hz = 1.8;
    p2.limb_amp_mps = 1.4;
    p2.rng_seed = 103;
    cfg.pedestrians = {p0, p1, p2};

    cfg.rdm.range_bin_lo = 2;
    cfg.rdm.range_bin_hi = 34;  // 32 range bins, ~1.2 m to ~20 m
    // TDS cells are range-sums of per-cell dB, so the band threshold lives
    // on that summed scale (32 cells x ~10 dB spread)
    cfg.windows.features.envelope_threshold_db = 350.0;
    cfg.windows.features.fallback_period_s = 1.0;

    cfg.gan.train.epochs = 30;
    cfg.gan.train.batch_size = 48;
    cfg.gan.train_frames = 150;

    cfg.mcl_arch.classes = 3;
    cfg.mcl_arch.branch_channels = 2;
    cfg.mcl_arch.dense_hidden = 64;
    cfg.mcl_arch.cn_hidden = {256, 64};
    cfg.mcl_arch.rbf_hidden = 8;  // room for one cluster per class and direction
    cfg.mcl_train.epochs = 60;
    cfg.mcl_train.batch_size = 32;
    return cfg;
}

void validate_config(const PipelineConfig& cfg) {
    validate_radar(cfg.radar);
    for (const auto& p : cfg.pedestrians) validate_profile(p);
    if (cfg.rdm.range_bin_hi > cfg.radar.samples_per_chirp ||
        cfg.rdm.range_bin_lo >= cfg.rdm.range_bin_hi)
        throw std::invalid_argument("config: invalid range gate");
    if (cfg.windows.features.window_frames < cfg.windows.tds_width)
        throw std::invalid_argument("config: feature window Z must be >= the TDS window width");
    if (cfg.windows.test_fraction <= 0.0 || cfg.windows.test_fraction >= 1.0)
        throw std::invalid_argument("config: test fraction must lie in (0,1)");
    if (cfg.mcl_arch.classes != cfg.pedestrians.size())
        throw std::invalid_argument("config: class count must match pedestrian count");
}

namespace {

using KvMap = std::map<std::string, std::string>;

std::string trim(const std::string& s) {
    std::size_t a = s.find_first_not_of(" \t\r");
    if (a == std::string::npos) return "";
    std::size_t b = s.find_last_not_of(" \t\r");
    return s.substr(a, b - a + 1);
}

/// section -> key -> value
std::map<std::string, KvMap> parse_ini(const std::string& text) {
    std::map<std::string, KvMap> out;
    std::istringstream in(text);
    std::string line, section;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        line = trim(line);
        if (line.empty() || line[0] == '#' || line[0] == ';') continue;
        if (line.front() == '[' && line.back() == ']') {
            section = trim(line.substr(1, line.size() - 2));
            out[section];
            continue;
        }
        auto eq = line.find('=');
        if (eq == std::string::npos)
            throw std::invalid_argument("config line " + std::to_string(lineno) +
                                        ": expected key=value");
        out[section][trim(line.substr(0, eq))] = trim(line.substr(eq + 1));
    }
    return out;
}

struct SectionReader {
    const std::string section;
    KvMap kv;

    bool take(const std::string& key, std::string& out) {
        auto it = kv.find(key);
        if (it == kv.end()) return false;
        out = it->second;
        kv.erase(it);
        return true;
    }
    void num(const std::string& key, double& out) {
        std::string s;
        if (take(key, s)) out = std::stod(s);
    }
    void num(const std::string& key, std::size_t& out) {
        std::string s;
        if (take(key, s)) out = static_cast<std::size_t>(std::stoull(s));
    }
    void num(const std::string& key, int& out) {
        std::string s;
        if (take(key, s)) out = std::stoi(s);
    }
    void boolean(const std::string& key, bool& out) {
        std::string s;
        if (take(key, s)) out = (s == "1" || s == "true" || s == "yes");
    }
    void text(const std::string& key, std::string& out) { take(key, out); }
    void finish() const {
        if (!kv.empty())
            throw std::invalid_argument("config: unknown key '" + kv.begin()->first +
                                        "' in section [" + section + "]");
    }
};

}  // namespace

PipelineConfig parse_config_text(const std::string& text) {
    PipelineConfig cfg = desk_config();
    cfg.pedestrians.clear();
    auto ini = parse_ini(text);

    auto reader = [&](const std::string& name) {
        SectionReader r{name, {}};
        auto it = ini.find(name);
        if (it != ini.end()) {
            r.kv = it->second;
            ini.erase(it);
        }
        return r;
    };

    {
        auto r = reader("radar");
        r.num("carrier_hz", cfg.radar.carrier_hz);
        r.num("bandwidth_hz", cfg.radar.bandwidth_hz);
        r.num("chirp_s", cfg.radar.chirp_s);
        r.num("samples_per_chirp", cfg.radar.samples_per_chirp);
        r.num("chirps_per_frame", cfg.radar.chirps_per_frame);
        r.num("frame_rate", cfg.radar.frame_rate);
        r.finish();
    }
    {
        auto r = reader("dataset");
        r.num("duration_s", cfg.duration_s);
        r.num("seed", cfg.seed);
        bool aug = cfg.augment;
        r.boolean("augment", aug);
        cfg.augment = aug;
        r.finish();
    }
    {
        auto r = reader("rdm");
        r.num("range_bin_lo", cfg.rdm.range_bin_lo);
        r.num("range_bin_hi", cfg.rdm.range_bin_hi);
        bool dn = cfg.rdm.denoise;
        r.boolean("denoise", dn);
        cfg.rdm.denoise = dn;
        r.num("denoise_percentile", cfg.rdm.denoise_cfg.percentile);
        r.num("denoise_margin_db", cfg.rdm.denoise_cfg.margin_db);
        r.num("suppress_atten_db", cfg.rdm.suppress_atten_db);
        r.num("suppress_half_width", cfg.rdm.suppress_half_width);
        r.finish();
    }
    {
        auto r = reader("windows");
        r.num("tds_width", cfg.windows.tds_width);
        r.num("train_stride", cfg.windows.train_stride);
        r.num("test_stride", cfg.windows.test_stride);
        r.num("test_fraction", cfg.windows.test_fraction);
        r.finish();
    }
    {
        auto r = reader("features");
        r.num("window_frames", cfg.windows.features.window_frames);
        r.num("envelope_threshold_db", cfg.windows.features.envelope_threshold_db);
        r.num("torso_band_fraction", cfg.windows.features.torso_band_fraction);
        r.num("min_period_s", cfg.windows.features.min_period_s);
        r.num("max_period_s", cfg.windows.features.max_period_s);
        r.num("fallback_period_s", cfg.windows.features.fallback_period_s);
        r.finish();
    }
    {
        auto r = reader("gan");
        r.num("epochs", cfg.gan.train.epochs);
        r.num("learning_rate", cfg.gan.train.learning_rate);
        r.num("k_ds", cfg.gan.train.k_ds);
        r.num("k_dt", cfg.gan.train.k_dt);
        r.num("k_g", cfg.gan.train.k_g);
        r.num("batch_size", cfg.gan.train.batch_size);
        r.num("seed", cfg.gan.train.rng_seed);
        r.num("train_frames", cfg.gan.train_frames);
        r.num("generated_ratio", cfg.gan.generated_ratio);
        r.finish();
    }
    {
        auto r = reader("mcl");
        r.num("classes", cfg.mcl_arch.classes);
        r.num("branch_channels", cfg.mcl_arch.branch_channels);
        r.num("dense_hidden", cfg.mcl_arch.dense_hidden);
        r.num("cn_hidden0", cfg.mcl_arch.cn_hidden[0]);
        r.num("cn_hidden1", cfg.mcl_arch.cn_hidden[1]);
        r.num("rbf_hidden", cfg.mcl_arch.rbf_hidden);
        r.num("epochs", cfg.mcl_train.epochs);
        r.num("learning_rate", cfg.mcl_train.learning_rate);
        r.num("batch_size", cfg.mcl_train.batch_size);
        r.num("seed", cfg.mcl_train.rng_seed);
        r.finish();
    }
    // [pedestrian.N] sections, contiguous from 0
    for (std::size_t i = 0;; ++i) {
        std::string name = "pedestrian." + std::to_string(i);
        if (ini.find(name) == ini.end()) break;
        auto r = reader(name);
        PedestrianProfile p;
        p.name = "ped" + std::to_string(i);
        p.label = static_cast<int>(i);
        r.text("name", p.name);
        r.num("label", p.label);
        r.num("base_range_m", p.base_range_m);
        r.num("torso_speed_mps", p.torso_speed_mps);
        r.num("gait_hz", p.gait_hz);
        r.num("limb_amp_mps", p.limb_amp_mps);
        r.num("torso_reflectivity", p.torso_reflectivity);
        r.num("limb_reflectivity", p.limb_reflectivity);
        r.num("corridor_min_m", p.corridor_min_m);
        r.num("corridor_max_m", p.corridor_max_m);
        r.num("snr_db", p.snr_db);
        r.num("seed", p.rng_seed);
        r.finish();
        cfg.pedestrians.push_back(p);
    }
    if (!ini.empty())
        throw std::invalid_argument("config: unknown section [" + ini.begin()->first + "]");
    if (cfg.pedestrians.empty()) cfg.pedestrians = desk_config().pedestrians;
    if (cfg.mcl_arch.classes != cfg.pedestrians.size())
        cfg.mcl_arch.classes = cfg.pedestrians.size();
    validate_config(cfg);
    return cfg;
}

PipelineConfig load_config(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open config " + path.string());
    std::ostringstream ss;
    ss << in.rdbuf();
    return parse_config_text(ss.str());
}

std::string config_to_text(const PipelineConfig& cfg) {
    std::ostringstream ss;
    ss.precision(17);
    ss << "[radar]\n";
    ss << "carrier_hz = " << cfg.radar.carrier_hz << "\n";
    ss << "bandwidth_hz = " << cfg.radar.bandwidth_hz << "\n";
    ss << "chirp_s = " << cfg.radar.chirp_s << "\n";
    ss << "samples_per_chirp = " << cfg.radar.samples_per_chirp << "\n";
    ss << "chirps_per_frame = " << cfg.radar.chirps_per_frame << "\n";
    ss << "frame_rate = " << cfg.radar.frame_rate << "\n";
    ss << "\n[dataset]\n";
    ss << "duration_s = " << cfg.duration_s << "\n";
    ss << "seed = " << cfg.seed << "\n";
    ss << "augment = " << (cfg.augment ? 1 : 0) << "\n";
    ss << "\n[rdm]\n";
    ss << "range_bin_lo = " << cfg.rdm.range_bin_lo << "\n";
    ss << "range_bin_hi = " << cfg.rdm.range_bin_hi << "\n";
    ss << "denoise = " << (cfg.rdm.denoise ? 1 : 0) << "\n";
    ss << "denoise_percentile = " << cfg.rdm.denoise_cfg.percentile << "\n";
    ss << "denoise_margin_db = " << cfg.rdm.denoise_cfg.margin_db << "\n";
    ss << "suppress_atten_db = " << cfg.rdm.suppress_atten_db << "\n";
    ss << "suppress_half_width = " << cfg.rdm.suppress_half_width << "\n";
    ss << "\n[windows]\n";
    ss << "tds_width = " << cfg.windows.tds_width << "\n";
    ss << "train_stride = " << cfg.windows.train_stride << "\n";
    ss << "test_stride = " << cfg.windows.test_stride << "\n";
    ss << "test_fraction = " << cfg.windows.test_fraction << "\n";
    ss << "\n[features]\n";
    ss << "window_frames = " << cfg.windows.features.window_frames << "\n";
    ss << "envelope_threshold_db = " << cfg.windows.features.envelope_threshold_db << "\n";
    ss << "torso_band_fraction = " << cfg.windows.features.torso_band_fraction << "\n";
    ss << "min_period_s = " << cfg.windows.features.min_period_s << "\n";
    ss << "max_period_s = " << cfg.windows.features.max_period_s << "\n";
    ss << "fallback_period_s = " << cfg.windows.features.fallback_period_s << "\n";
    ss << "\n[gan]\n";
    ss << "epochs = " << cfg.gan.train.epochs << "\n";
    ss << "learning_rate = " << cfg.gan.train.learning_rate << "\n";
    ss << "k_ds = " << cfg.gan.train.k_ds << "\n";
    ss << "k_dt = " << cfg.gan.train.k_dt << "\n";
    ss << "k_g = " << cfg.gan.train.k_g << "\n";
    ss << "batch_size = " << cfg.gan.train.batch_size << "\n";
    ss << "seed = " << cfg.gan.train.rng_seed << "\n";
    ss << "train_frames = " << cfg.gan.train_frames << "\n";
    ss << "generated_ratio = " << cfg.gan.generated_ratio << "\n";
    ss << "\n[mcl]\n";
    ss << "classes = " << cfg.mcl_arch.classes << "\n";
    ss << "branch_channels = " << cfg.mcl_arch.branch_channels << "\n";
    ss << "dense_hidden = " << cfg.mcl_arch.dense_hidden << "\n";
    ss << "cn_hidden0 = " << cfg.mcl_arch.cn_hidden[0] << "\n";
    ss << "cn_hidden1 = " << cfg.mcl_arch.cn_hidden[1] << "\n";
    ss << "rbf_hidden = " << cfg.mcl_arch.rbf_hidden << "\n";
    ss << "epochs = " << cfg.mcl_train.epochs << "\n";
    ss << "learning_rate = " << cfg.mcl_train.learning_rate << "\n";
    ss << "batch_size = " << cfg.mcl_train.batch_size << "\n";
    ss << "seed = " << cfg.mcl_train.rng_seed << "\n";
    for (std::size_t i = 0; i < cfg.pedestrians.size(); ++i) {
        const auto& p = cfg.pedestrians[i];
        ss << "\n[pedestrian." << i << "]\n";
        ss << "name = " << p.name << "\n";
        ss << "label = " << p.label << "\n";
        ss << "base_range_m = " << p.base_range_m << "\n";
        ss << "torso_speed_mps = " << p.torso_speed_mps << "\n";
        ss << "gait_hz = " << p.gait_hz << "\n";
        ss << "limb_amp_mps = " << p.limb_amp_mps << "\n";
        ss << "torso_reflectivity = " << p.torso_reflectivity << "\n";
        ss << "limb_reflectivity = " << p.limb_reflectivity << "\n";
        ss << "corridor_min_m = " << p.corridor_min_m << "\n";
        ss << "corridor_max_m = " << p.corridor_max_m << "\n";
        ss << "snr_db = " << p.snr_db << "\n";
        ss << "seed = " << p.rng_seed << "\n";
    }
    return ss.str();
}

}  // namespace demcl
