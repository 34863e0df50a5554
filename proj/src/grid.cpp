#include "evwarn/grid.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>

namespace evwarn {

Cell cell_of(CartPoint p, double cell_size) {
    if (!(cell_size > 0.0)) {
        throw std::invalid_argument("cell_of: cell size must be positive");
    }
    if (p.x < 0.0 || p.y < 0.0) {
        throw OutOfGridError("cell_of: point lies outside the grid (negative coordinate)");
    }
    return Cell{static_cast<int>(std::floor(p.x / cell_size)),
                static_cast<int>(std::floor(p.y / cell_size)), cell_size};
}

std::string cell_name(const Cell& c) {
    if (c.col < 0 || c.row < 0) {
        throw std::invalid_argument("cell_name: negative cell index");
    }
    std::string letters;
    int n = c.col;
    while (true) {
        letters.push_back(static_cast<char>('A' + n % 26));
        n = n / 26 - 1;
        if (n < 0) break;
    }
    std::reverse(letters.begin(), letters.end());
    return letters + std::to_string(c.row);
}

Cell parse_cell_name(std::string_view name, double cell_size) {
    std::size_t i = 0;
    long long col_plus_one = 0;  // bijective base-26, A=1 while scanning
    while (i < name.size() && name[i] >= 'A' && name[i] <= 'Z') {
        col_plus_one = col_plus_one * 26 + (name[i] - 'A' + 1);
        if (col_plus_one > 1'000'000'000LL) {
            throw std::invalid_argument("parse_cell_name: column out of range");
        }
        ++i;
    }
    if (i == 0) {
        throw std::invalid_argument("parse_cell_name: label must start with A-Z letters");
    }
    if (i == name.size()) {
        throw std::invalid_argument("parse_cell_name: label missing row digits");
    }
    long long row = 0;
    for (; i < name.size(); ++i) {
        if (!std::isdigit(static_cast<unsigned char>(name[i]))) {
            throw std::invalid_argument("parse_cell_name: unexpected character in label");
        }
        row = row * 10 + (name[i] - '0');
        if (row > 1'000'000'000LL) {
            throw std::invalid_argument("parse_cell_name: row out of range");
        }
    }
    return Cell{static_cast<int>(col_plus_one - 1), static_cast<int>(row),
                cell_size};
}

bool Neighborhood::contains(const Cell& c) const {
    return std::any_of(members.begin(), members.end(),
                       [&](const std::optional<Cell>& m) { return m && *m == c; });
}

Neighborhood neighborhood(const Cell& center) {
    Neighborhood g;
    g.center = center;
    std::size_t k = 0;
    for (int dx = -1; dx <= 1; ++dx) {
        for (int dy = -1; dy <= 1; ++dy) {
            if (dx == 0 && dy == 0) continue;
            const int col = center.col + dx;
            const int row = center.row + dy;
            if (col >= 0 && row >= 0) {
                g.members[k] = Cell{col, row, center.size};
            }
            ++k;
        }
    }
    return g;
}

bool within_cell_closed(CartPoint p, const Cell& cell) {
    return p.x >= cell.x_min() && p.x <= cell.x_min() + cell.size &&
           p.y >= cell.y_min() && p.y <= cell.y_min() + cell.size;
}

bool intra(CartPoint i, const Cell& user_cell) {
    return within_cell_closed(i, user_cell);
}

bool inter(CartPoint i, const Cell& user_cell, const Cell& sensor_cell) {
    if (!neighborhood(user_cell).contains(sensor_cell)) return false;
    return within_cell_closed(i, user_cell);
}

bool coexist(CartPoint sensor_pos, const Cell& user_cell) {
    return within_cell_closed(sensor_pos, user_cell);
}

}  // namespace evwarn
