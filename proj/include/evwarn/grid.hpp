#pragma once

#include <array>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>

#include "evwarn/geo.hpp"

namespace evwarn {

inline constexpr double kDefaultCellSizeM = 1000.0;

/// Square service-grid cell. Columns run east (letter-coded), rows run
/// north (number-coded); the cell covers [x_min, x_min+size) x
/// [y_min, y_min+size) for grid indexing purposes.
struct Cell {
    int col = 0;
    int row = 0;
    double size = kDefaultCellSizeM;

    double x_min() const { return col * size; }
    double y_min() const { return row * size; }

    bool operator==(const Cell& other) const {
        return col == other.col && row == other.row && size == other.size;
    }
};

struct OutOfGridError : std::domain_error {
    using std::domain_error::domain_error;
};

/// Map a point to its cell: col = floor(x/d), row = floor(y/d). Points on
/// a shared edge belong to the higher-index cell. Negative coordinates lie
/// outside the grid.
Cell cell_of(CartPoint p, double cell_size = kDefaultCellSizeM);

/// Spreadsheet-style label, e.g. "B3" or "AA2". Letters encode the column
/// (A=0, ..., Z=25, AA=26, ...), digits the row.
std::string cell_name(const Cell& c);

/// Parse a label produced by cell_name. Throws std::invalid_argument for
/// malformed labels.
Cell parse_cell_name(std::string_view name,
                     double cell_size = kDefaultCellSizeM);

/// The eight cells surrounding `center`. Offsets that would leave the grid
/// (negative indices) are absent rather than wrapped.
struct Neighborhood {
    Cell center;
    std::array<std::optional<Cell>, 8> members;

    bool contains(const Cell& c) const;
};

Neighborhood neighborhood(const Cell& center);

/// True when `p` lies within `cell` bounds, closed on all four sides. Used
/// by the threat predicates, which deliberately accept shared edges for
/// both adjacent cells.
bool within_cell_closed(CartPoint p, const Cell& cell);

/// Intersection point inside the user's own cell (closed bounds).
bool intra(CartPoint i, const Cell& user_cell);

/// Intersection point inside the user's cell while the sensor sits in one
/// of the eight neighboring cells. False when the sensor is outside the
/// 3x3 grid or co-resident with the user.
bool inter(CartPoint i, const Cell& user_cell, const Cell& sensor_cell);

/// Sensor located inside the user's cell (closed bounds).
bool coexist(CartPoint sensor_pos, const Cell& user_cell);

}  // namespace evwarn
