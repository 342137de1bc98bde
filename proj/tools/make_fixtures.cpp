// Regenerates the synthetic files under fixtures/. Usage: make_fixtures <output-dir>
//
// Monthly BTC/MPU: 158 levels, Jul 2010 - Aug 2023, from an MSM(2)-VAR(1) with regime
// specific AR terms taken from the published two-regime BTC/MPU estimates, and the
// 0.97/0.895 persistence of the BTC-only model. BTC starts at 0.06, MPU at 100.
// FOMC: the 55 announcements Feb 2017 - Sep 2023 (upper bound of the target range).
// Hourly prices: +-48 hour windows around each announcement.

#include "regimekit/msvar.hpp"
#include "regimekit/simulate.hpp"
#include "regimekit/timeseries.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>

using namespace regimekit;
namespace fs = std::filesystem;

namespace {

constexpr std::uint64_t kSeed = 20231001;

void write_text(const fs::path& p, const std::string& s) {
    std::ofstream f(p, std::ios::binary);
    f << s;
}

msvar::MsVarModel monthly_model() {
    msvar::MsVarModel m;
    m.spec.k = 2;
    m.spec.q = 1;
    m.spec.r = 2;
    m.spec.switch_target = msvar::SwitchTarget::Mean;
    m.spec.switch_variance = true;
    m.spec.switch_ar = true;
    m.names = {"BTC", "MPU"};
    m.means = {Eigen::Vector2d(0.024, 0.018), Eigen::Vector2d(0.336, 0.062)};
    Eigen::Matrix2d b1, b2;
    b1 << 0.0538, -0.028, 0.083, -0.24;
    b2 << 0.381, -0.44, 0.358, -0.16;
    m.ar = {{b1}, {b2}};
    m.covariances = {Eigen::Vector2d(0.04 * 0.04, 0.198 * 0.198).asDiagonal().toDenseMatrix(),
                     Eigen::Vector2d(0.237 * 0.237, 0.129 * 0.129).asDiagonal().toDenseMatrix()};
    Eigen::Matrix2d p;
    p << 0.97, 0.03, 0.105, 0.895;
    m.transitions = msvar::TransitionMatrix(p);
    return m;
}

// US daylight saving: second Sunday of March to first Sunday of November.
bool us_dst(const std::chrono::year_month_day& d) {
    using namespace std::chrono;
    const sys_days start = sys_days{d.year() / March / Sunday[2]};
    const sys_days end = sys_days{d.year() / November / Sunday[1]};
    const sys_days day{d};
    return day >= start && day < end;
}

struct Meeting {
    int y;
    unsigned m, d;
    double upper;  // upper bound after the decision, percent
};

// Upper bound of the federal funds target range after each announcement.
const Meeting kMeetings[] = {
    {2017, 2, 1, 0.75},   {2017, 3, 15, 1.00},  {2017, 5, 3, 1.00},   {2017, 6, 14, 1.25},  {2017, 7, 26, 1.25},
    {2017, 9, 20, 1.25},  {2017, 11, 1, 1.25},  {2017, 12, 13, 1.50}, {2018, 1, 31, 1.50},  {2018, 3, 21, 1.75},
    {2018, 5, 2, 1.75},   {2018, 6, 13, 2.00},  {2018, 8, 1, 2.00},   {2018, 9, 26, 2.25},  {2018, 11, 8, 2.25},
    {2018, 12, 19, 2.50}, {2019, 1, 30, 2.50},  {2019, 3, 20, 2.50},  {2019, 5, 1, 2.50},   {2019, 6, 19, 2.50},
    {2019, 7, 31, 2.25},  {2019, 9, 18, 2.00},  {2019, 10, 30, 1.75}, {2019, 12, 11, 1.75}, {2020, 1, 29, 1.75},
    {2020, 3, 3, 1.25},   {2020, 3, 15, 0.25},  {2020, 4, 29, 0.25},  {2020, 6, 10, 0.25},  {2020, 7, 29, 0.25},
    {2020, 9, 16, 0.25},  {2020, 11, 5, 0.25},  {2020, 12, 16, 0.25}, {2021, 1, 27, 0.25},  {2021, 3, 17, 0.25},
    {2021, 4, 28, 0.25},  {2021, 6, 16, 0.25},  {2021, 7, 28, 0.25},  {2021, 9, 22, 0.25},  {2021, 11, 3, 0.25},
    {2021, 12, 15, 0.25}, {2022, 1, 26, 0.25},  {2022, 3, 16, 0.50},  {2022, 5, 4, 1.00},   {2022, 6, 15, 1.75},
    {2022, 7, 27, 2.50},  {2022, 9, 21, 3.25},  {2022, 11, 2, 4.00},  {2022, 12, 14, 4.50}, {2023, 2, 1, 4.75},
    {2023, 3, 22, 5.00},  {2023, 5, 3, 5.25},   {2023, 6, 14, 5.25},  {2023, 7, 26, 5.50},  {2023, 9, 20, 5.50},
};

std::string rate(double percent) {
    char buf[16];
    std::snprintf(buf, sizeof buf, "%.4f", percent / 100.0);
    return buf;
}

}  // namespace

int main(int argc, char** argv) {
    if (argc != 2) {
        std::cerr << "usage: make_fixtures <output-dir>\n";
        return 2;
    }
    const fs::path out = argv[1];
    fs::create_directories(out);

    // Monthly levels.
    const auto sim = simulate::simulate_msvar(monthly_model(), 157, simulate::kDefaultBurnIn, substream(Seed{kSeed}, 0));
    std::vector<Instant> months;
    for (int i = 0; i < 158; ++i) {
        using namespace std::chrono;
        const year_month ym = year{2010} / July + std::chrono::months{i};
        months.push_back(time_point_cast<seconds>(sys_days{ym / 1}));
    }
    Eigen::MatrixXd levels(158, 2);
    levels.row(0) << 0.06, 100.0;
    for (int t = 1; t < 158; ++t) levels.row(t) = levels.row(t - 1).array() * sim.series.values().row(t - 1).array().exp();
    const TimeSeries both(months, {"BTC", "MPU"}, levels, Frequency::Monthly);
    write_csv(both, out / "btc_mpu_monthly.csv");
    write_csv(both.select({"BTC"}), out / "btc_monthly.csv");
    std::string regimes = "date,regime\n";
    for (int t = 0; t < 157; ++t)
        regimes += format_instant(months[static_cast<std::size_t>(t + 1)]) + "," + std::to_string(sim.states[static_cast<std::size_t>(t)] + 1) + "\n";
    write_text(out / "btc_mpu_monthly_regimes.csv", regimes);

    // FOMC calendar and hourly windows.
    std::string cal = "datetime,actual,forecast,previous\n";
    Rng rng(substream(Seed{kSeed}, 1));
    std::vector<Instant> hours;
    std::vector<double> price;
    double previous = 0.75;
    double last_change = 0.0, last_return = 0.0;
    double level = std::log(1000.0);
    for (const auto& mt : kMeetings) {
        using namespace std::chrono;
        const year_month_day ymd{year{mt.y}, month{mt.m}, day{mt.d}};
        const unsigned hour = us_dst(ymd) ? 14 : 15;
        const Instant at = make_instant(mt.y, mt.m, mt.d, hour);
        cal += format_instant(at) + "," + rate(mt.upper) + "," + rate(mt.upper) + "," + rate(previous) + "\n";
        const double change = (mt.upper - previous) / 100.0;

        // Window of 97 hourly bars; the bar after the announcement carries the event return.
        const double event_return = 0.0506 - 1.968 * last_change + 0.189 * last_return + 0.005 * rng.normal();
        double lp = level;
        for (int h = -48; h <= 48; ++h) {
            hours.push_back(at + std::chrono::hours{h});
            price.push_back(std::exp(lp));
            lp += h == 0 ? event_return : 0.007 * rng.normal();
        }
        level += 0.02 + 0.1 * rng.normal();
        last_change = change;
        last_return = event_return;
        previous = mt.upper;
    }
    write_text(out / "fomc_calendar.csv", cal);
    const Eigen::MatrixXd pm = Eigen::Map<const Eigen::VectorXd>(price.data(), static_cast<Eigen::Index>(price.size()));
    write_csv(TimeSeries(hours, {"BTC"}, pm, Frequency::Hourly), out / "btc_hourly_fomc.csv");

    // Two independent random walks for the unit-root and cointegration examples.
    write_csv(simulate::simulate_random_walks(500, 2, substream(Seed{kSeed}, 2)), out / "random_walks.csv");

    std::cout << "fixtures written to " << out << "\n";
    return 0;
}
