#include <polyext/error.hh>
#include <polyext/scenario.hh>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <numbers>
#include <ostream>

namespace polyext::cli {

namespace {

// Style version 1: fixed 800x600 viewport, two panels, one colour per curve.
constexpr double kWidth = 800, kHeight = 600;
constexpr double kLeft = 70, kRight = 130, kTop = 40, kGap = 50, kBottom = 40;
const char * const kPalette[] = {"#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#17becf", "#8c564b", "#e377c2"};

std::string num(double v)
{
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.2f", v);
    return buf;
}

std::string tick_label(double v)
{
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.3g", v);
    std::string s = buf;
    return s == "-0" ? "0" : s;
}

std::string escape(const std::string & s)
{
    std::string out;
    for (char ch : s) {
        switch (ch) {
        case '&': out += "&amp;"; break;
        case '<': out += "&lt;"; break;
        case '>': out += "&gt;"; break;
        default: out += ch;
        }
    }
    return out;
}

struct Panel {
    double top, height, ymin, ymax;
    double y(double v) const { return top + height * (1.0 - (v - ymin) / (ymax - ymin)); }
};

}

void write_bundle_svg(const RootBundle & b, const std::string & title, std::ostream & out)
{
    const auto & base = *b.base;
    bool circle = base.kind() == BaseKind::circle;
    if (! circle && base.kind() != BaseKind::interval)
        throw InvalidArgument("figures are drawn over interval or circle bases only");
    const int N = b.sample_count(), n = b.degree;
    for (int e = 0; e < base.edge_count(); ++e)
        if (base.edge(e).tail != e)
            throw InvalidArgument("unexpected edge layout");

    // curve k starts on sheet k of the first fiber and follows the matchings
    const int points = circle ? N + 1 : N;
    std::vector<std::vector<cplx>> curve(n, std::vector<cplx>(points));
    std::vector<double> xs(points);
    for (int k = 0; k < n; ++k) {
        int sheet = k;
        for (int s = 0; s < points; ++s) {
            curve[k][s] = b.fibers[s % N][sheet];
            if (s < base.edge_count())
                sheet = b.edge_perms[s][sheet];
        }
    }
    for (int s = 0; s < points; ++s)
        xs[s] = s < N ? base.coordinate(s).u : 2.0 * std::numbers::pi;
    const double xmax = circle ? 2.0 * std::numbers::pi : 1.0;

    auto range = [&](auto part) {
        double lo = 0.0, hi = 0.0;
        for (const auto & c : curve)
            for (cplx v : c) {
                lo = std::min(lo, part(v));
                hi = std::max(hi, part(v));
            }
        double pad = std::max(0.05 * (hi - lo), 0.05);
        return std::pair(lo - pad, hi + pad);
    };
    const double ph = (kHeight - kTop - kGap - kBottom) / 2.0;
    auto [rlo, rhi] = range([](cplx v) { return v.real(); });
    auto [ilo, ihi] = range([](cplx v) { return v.imag(); });
    Panel panels[2] = {{kTop, ph, rlo, rhi}, {kTop + ph + kGap, ph, ilo, ihi}};
    const double pw = kWidth - kLeft - kRight;
    auto X = [&](double x) { return kLeft + pw * x / xmax; };

    out << "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n";
    out << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << kWidth << "\" height=\"" << kHeight
        << "\" viewBox=\"0 0 " << kWidth << ' ' << kHeight << "\" font-family=\"sans-serif\" font-size=\"12\">\n";
    out << "<!-- polyext figure style 1 -->\n";
    out << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
    out << "<text x=\"" << num(kWidth / 2) << "\" y=\"22\" text-anchor=\"middle\" font-size=\"15\">" << escape(title)
        << "</text>\n";

    const char * names[2] = {"Re", "Im"};
    for (int p = 0; p < 2; ++p) {
        const auto & P = panels[p];
        out << "<g class=\"panel\" id=\"" << (p == 0 ? "real" : "imag") << "\">\n";
        out << "<rect x=\"" << num(kLeft) << "\" y=\"" << num(P.top) << "\" width=\"" << num(pw) << "\" height=\""
            << num(P.height) << "\" fill=\"none\" stroke=\"black\"/>\n";
        out << "<text x=\"18\" y=\"" << num(P.top + P.height / 2) << "\" transform=\"rotate(-90 18 "
            << num(P.top + P.height / 2) << ")\" text-anchor=\"middle\">" << names[p] << "</text>\n";
        for (int t = 0; t <= 4; ++t) {
            double v = P.ymin + (P.ymax - P.ymin) * t / 4.0;
            if (std::abs(v) < 1e-9 * (P.ymax - P.ymin))
                v = 0.0;
            out << "<line x1=\"" << num(kLeft - 5) << "\" y1=\"" << num(P.y(v)) << "\" x2=\"" << num(kLeft) << "\" y2=\""
                << num(P.y(v)) << "\" stroke=\"black\"/>\n";
            out << "<text x=\"" << num(kLeft - 8) << "\" y=\"" << num(P.y(v) + 4) << "\" text-anchor=\"end\">"
                << tick_label(v) << "</text>\n";
        }
        if (P.ymin < 0 && P.ymax > 0)
            out << "<line x1=\"" << num(kLeft) << "\" y1=\"" << num(P.y(0)) << "\" x2=\"" << num(kLeft + pw) << "\" y2=\""
                << num(P.y(0)) << "\" stroke=\"#bbbbbb\" stroke-dasharray=\"2,3\"/>\n";
        for (int t = 0; t <= 4; ++t) {
            double x = xmax * t / 4.0;
            static const char * pi_labels[] = {"0", "&#960;/2", "&#960;", "3&#960;/2", "2&#960;"};
            out << "<line x1=\"" << num(X(x)) << "\" y1=\"" << num(P.top + P.height) << "\" x2=\"" << num(X(x))
                << "\" y2=\"" << num(P.top + P.height + 5) << "\" stroke=\"black\"/>\n";
            out << "<text x=\"" << num(X(x)) << "\" y=\"" << num(P.top + P.height + 18) << "\" text-anchor=\"middle\">"
                << (circle ? std::string(pi_labels[t]) : tick_label(x)) << "</text>\n";
        }
        // coincidence points
        for (int s = 0; s < N; ++s)
            if (b.cluster_count[s] < n)
                out << "<line x1=\"" << num(X(xs[s])) << "\" y1=\"" << num(P.top) << "\" x2=\"" << num(X(xs[s]))
                    << "\" y2=\"" << num(P.top + P.height) << "\" stroke=\"#999999\" stroke-dasharray=\"4,4\"/>\n";
        for (int k = 0; k < n; ++k) {
            out << "<polyline fill=\"none\" stroke-width=\"1.5\" stroke=\"" << kPalette[k % 8] << "\" points=\"";
            // skip points that would land on the same pixel column and row
            std::string last;
            for (int s = 0; s < points; ++s) {
                double v = p == 0 ? curve[k][s].real() : curve[k][s].imag();
                std::string pt = num(X(xs[s])) + "," + num(P.y(v));
                if (pt == last)
                    continue;
                out << (last.empty() ? "" : " ") << pt;
                last = pt;
            }
            out << "\"/>\n";
        }
        out << "</g>\n";
    }

    // legend: curves named after the sheet they start on
    for (int k = 0; k < n; ++k) {
        double y = kTop + 10 + 20 * k;
        double x = kWidth - kRight + 15;
        out << "<line x1=\"" << num(x) << "\" y1=\"" << num(y) << "\" x2=\"" << num(x + 25) << "\" y2=\"" << num(y)
            << "\" stroke-width=\"2\" stroke=\"" << kPalette[k % 8] << "\"/>\n";
        out << "<text x=\"" << num(x + 32) << "\" y=\"" << num(y + 4) << "\">root " << (k + 1) << "</text>\n";
    }
    out << "</svg>\n";
}

void emit_figures(const RootBundle & bundle, const std::string & path, const std::string & title)
{
    std::ofstream f(path, std::ios::binary);
    if (! f)
        throw Error("cannot write " + path);
    write_bundle_svg(bundle, title, f);
}

}
