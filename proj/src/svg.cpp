#include "adex/pipeline/svg.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>

#include "adex/errors.hpp"

namespace adex::pipe {

namespace {

struct Extent {
    double x_min = std::numeric_limits<double>::infinity();
    double x_max = -std::numeric_limits<double>::infinity();
    double y_min = std::numeric_limits<double>::infinity();
    double y_max = -std::numeric_limits<double>::infinity();

    void grow(const std::vector<SvgSeries>& series) {
        for (const auto& s : series) {
            for (double v : s.x) {
                x_min = std::min(x_min, v);
                x_max = std::max(x_max, v);
            }
            for (double v : s.y) {
                y_min = std::min(y_min, v);
                y_max = std::max(y_max, v);
            }
        }
        if (!(x_max > x_min)) x_max = x_min + 1;
        if (!(y_max > y_min)) y_max = y_min + 1;
    }
};

class SvgDoc {
public:
    SvgDoc(const std::string& path, int w, int h) : out_(path, std::ios::trunc), w_(w), h_(h) {
        if (!out_) throw IoError("cannot open '" + path + "' for writing");
        out_ << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << w << "\" height=\"" << h
             << "\" viewBox=\"0 0 " << w << " " << h << "\">\n"
             << "<rect width=\"" << w << "\" height=\"" << h << "\" fill=\"white\"/>\n";
    }

    void frame(const std::string& title, const std::string& xl, const std::string& yl,
               const Extent& e) {
        out_ << "<rect x=\"" << ml_ << "\" y=\"" << mt_ << "\" width=\"" << plot_w() << "\" height=\""
             << plot_h() << "\" fill=\"none\" stroke=\"#444\"/>\n";
        text(w_ / 2, 16, title, 13, "middle");
        text(w_ / 2, h_ - 6, xl, 11, "middle");
        out_ << "<text x=\"12\" y=\"" << h_ / 2 << "\" font-size=\"11\" text-anchor=\"middle\" "
             << "transform=\"rotate(-90 12 " << h_ / 2 << ")\">" << yl << "</text>\n";
        char buf[64];
        std::snprintf(buf, sizeof buf, "%.4g", e.x_min);
        text(ml_, h_ - mb_ + 14, buf, 10, "middle");
        std::snprintf(buf, sizeof buf, "%.4g", e.x_max);
        text(w_ - mr_, h_ - mb_ + 14, buf, 10, "middle");
        std::snprintf(buf, sizeof buf, "%.4g", e.y_min);
        text(ml_ - 4, h_ - mb_, buf, 10, "end");
        std::snprintf(buf, sizeof buf, "%.4g", e.y_max);
        text(ml_ - 4, mt_ + 10, buf, 10, "end");
    }

    double px(double x, const Extent& e) const {
        return ml_ + (x - e.x_min) / (e.x_max - e.x_min) * plot_w();
    }
    double py(double y, const Extent& e) const {
        return h_ - mb_ - (y - e.y_min) / (e.y_max - e.y_min) * plot_h();
    }

    void polyline(const SvgSeries& s, const Extent& e) {
        if (s.x.empty()) return;
        out_ << "<polyline fill=\"none\" stroke=\"" << s.color << "\" stroke-width=\"1\" points=\"";
        for (std::size_t i = 0; i < s.x.size(); ++i)
            out_ << px(s.x[i], e) << "," << py(s.y[i], e) << " ";
        out_ << "\"/>\n";
    }

    void dots(const SvgSeries& s, const Extent& e) {
        for (std::size_t i = 0; i < s.x.size(); ++i)
            out_ << "<circle cx=\"" << px(s.x[i], e) << "\" cy=\"" << py(s.y[i], e)
                 << "\" r=\"1.5\" fill=\"" << s.color << "\" fill-opacity=\"0.6\"/>\n";
    }

    void legend(const std::vector<SvgSeries>& series) {
        int y = mt_ + 14;
        for (const auto& s : series) {
            if (s.label.empty()) continue;
            out_ << "<line x1=\"" << ml_ + 8 << "\" x2=\"" << ml_ + 28 << "\" y1=\"" << y
                 << "\" y2=\"" << y << "\" stroke=\"" << s.color << "\"/>\n";
            text(ml_ + 34, y + 4, s.label, 10, "start");
            y += 14;
        }
    }

    void text(double x, double y, const std::string& t, int size, const std::string& anchor) {
        out_ << "<text x=\"" << x << "\" y=\"" << y << "\" font-size=\"" << size
             << "\" text-anchor=\"" << anchor << "\">" << t << "</text>\n";
    }

    ~SvgDoc() { out_ << "</svg>\n"; }

    double plot_w() const { return w_ - ml_ - mr_; }
    double plot_h() const { return h_ - mt_ - mb_; }

private:
    std::ofstream out_;
    int w_, h_;
    int ml_ = 52, mr_ = 14, mt_ = 26, mb_ = 34;
};

}  // namespace

void svg_line_plot(const std::string& path, const std::vector<SvgSeries>& series,
                   const std::string& title, const std::string& x_label,
                   const std::string& y_label, int width, int height) {
    Extent e;
    e.grow(series);
    SvgDoc doc(path, width, height);
    doc.frame(title, x_label, y_label, e);
    for (const auto& s : series) doc.polyline(s, e);
    doc.legend(series);
}

void svg_scatter_plot(const std::string& path, const std::vector<SvgSeries>& series,
                      const std::string& title, const std::string& x_label,
                      const std::string& y_label, int width, int height) {
    Extent e;
    e.grow(series);
    SvgDoc doc(path, width, height);
    doc.frame(title, x_label, y_label, e);
    for (const auto& s : series) doc.dots(s, e);
    doc.legend(series);
}

}  // namespace adex::pipe
