#pragma once

#include <cstdint>
#include <iosfwd>
#include <stdexcept>
#include <string>
#include <vector>

namespace rch {

using Vec = std::vector<double>;

struct PreconditionError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// p-norm; p = +inf is the max norm. dim = 0 accepts any length.
struct NormSpec {
    double p = 2.0;
    int dim = 0;

    bool is_inf() const;
    double dual() const;  // q with 1/p + 1/q = 1
    std::string str() const;
    static NormSpec parse(const std::string& s);  // "1", "2", "1.5", "inf", "max"
};

double norm_eval(const NormSpec& n, const Vec& v);
double norm_raw(double p, const double* v, int dim);

// unit vectors (in n) spread over the sphere; dim 1 gives {+1,-1}
std::vector<Vec> ball_directions(const NormSpec& n, int dim, int count);

struct Box {
    Vec lo, hi;
    int dim() const { return static_cast<int>(lo.size()); }
    bool contains(const double* x) const;
    void validate() const;
};

// norm of the per-axis gap between x and the closed box
double box_point_distance(const NormSpec& n, const Box& b, const double* x);

struct GridSpec {
    Box box;
    Vec delta;
    std::vector<int64_t> counts;
    std::vector<int64_t> strides;

    static GridSpec make(const Box& box, const Vec& delta);
    static GridSpec make(const Box& box, double delta);

    int dim() const { return static_cast<int>(delta.size()); }
    int64_t size() const;
    int64_t index(const int64_t* k) const;
    void unravel(int64_t idx, int64_t* k) const;
    void center(int64_t idx, double* out) const;
    Vec center(int64_t idx) const;
    Box cell_box(int64_t idx) const;
    bool in_range(const int64_t* k) const;
    bool on_edge(int64_t idx) const;
    double cell_radius(const NormSpec& n) const;  // half the diameter
    double cell_diameter(const NormSpec& n) const;
    bool operator==(const GridSpec& o) const;
    bool operator!=(const GridSpec& o) const { return !(*this == o); }
};

class CellSet {
public:
    CellSet() = default;
    explicit CellSet(GridSpec g);

    const GridSpec& grid() const { return grid_; }
    int dim() const { return grid_.dim(); }

    bool test(int64_t i) const { return bits_[static_cast<size_t>(i)] != 0; }
    void set(int64_t i) { bits_[static_cast<size_t>(i)] = 1; }
    void reset(int64_t i) { bits_[static_cast<size_t>(i)] = 0; }

    int64_t count() const;
    bool empty() const;
    std::vector<int64_t> indices() const;
    bool touches_boundary() const;
    // some operation wanted a cell outside the box
    bool clipped = false;

    // all cells whose closed box contains x; false if x is outside the grid
    bool add_point(const double* x);
    void add_box(const Box& b);
    bool contains_point(const double* x) const;

    CellSet& operator|=(const CellSet& o);
    CellSet& operator&=(const CellSet& o);
    CellSet complement() const;
    bool operator==(const CellSet& o) const;
    bool operator!=(const CellSet& o) const { return !(*this == o); }

    // cells with at least one absent (or off-grid) neighbor in the 3^n block
    std::vector<int64_t> boundary_cells() const;
    // min/max occupied center along each axis; empty set gives empty vectors
    void center_extent(Vec& lo, Vec& hi) const;
    double diameter(const NormSpec& n) const;

    const std::vector<uint8_t>& raw() const { return bits_; }
    std::vector<uint8_t>& raw() { return bits_; }

    static CellSet from_box(const GridSpec& g, const Box& b);
    static CellSet from_point(const GridSpec& g, const Vec& x);
    static CellSet full(const GridSpec& g);

private:
    GridSpec grid_;
    std::vector<uint8_t> bits_;
};

CellSet inflate(const CellSet& s, double radius, const NormSpec& n);
double set_distance(const CellSet& a, const CellSet& b, const NormSpec& n);
bool contains(const CellSet& outer, const CellSet& inner);
// s plus every cell that cannot reach the grid edge without crossing s (face neighbors)
CellSet fill_holes(const CellSet& s);

void write_cellset_csv(std::ostream& os, const CellSet& s);
CellSet read_cellset_csv(std::istream& is);
void save_cellset(const std::string& path, const CellSet& s);
CellSet load_cellset(const std::string& path);

std::string fmt_double(double v);  // shortest round-trip text
std::string fmt_vec(const Vec& v, char sep = ',');

}  // namespace rch
