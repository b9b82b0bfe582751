#pragma once

// Default PMU placements for the IEEE 24-bus RTS and the IEEE 118-bus system.
// Branch ids are 1-based rows of the bundled case files' branch tables.

#include <string>
#include <vector>

#include "pmufdi/grid/measurement.hpp"

namespace pmufdi {

namespace detail {

inline PmuPlan make_plan(const std::vector<int>& v, const std::vector<int>& f,
                         const std::vector<int>& t) {
    PmuPlan p;
    for (int b : v) p.voltage_buses.emplace_back(b);
    for (int k : f) p.from_branches.emplace_back(k);
    for (int k : t) p.to_branches.emplace_back(k);
    return p;
}

}  // namespace detail

inline PmuPlan ieee24_plan() {
    return detail::make_plan(
        {1, 2, 7, 9, 10, 11, 15, 17, 20},
        {1, 2, 3, 4, 5, 11, 14, 15, 16, 17, 18, 19, 24, 25, 26, 27, 30, 31, 36, 37},
        {1, 6, 8, 9, 10, 12, 13, 14, 16, 28, 34, 35});
}

inline PmuPlan ieee118_plan() {
    return detail::make_plan(
        {2,  5,  10, 12, 15, 17, 21,  25,  29,  34,  37,  41,  45,  49,  53,  56,
         62, 64, 72, 73, 75, 77, 80,  85,  87,  91,  94,  101, 105, 110, 114, 116},
        {5,   11,  13,  17,  20,  21,  23,  26,  28,  33,  39,  40,  44,  49,  50,  52,
         53,  58,  60,  62,  68,  70,  71,  74,  75,  76,  80,  82,  85,  86,  95,  97,
         98,  99,  100, 101, 106, 120, 121, 123, 124, 128, 133, 135, 136, 143, 147, 148,
         150, 151, 152, 153, 155, 162, 169, 170, 171, 176, 177, 178, 182, 184, 185},
        {1,   3,   4,   8,   9,   12,  13,  14,  15,  18,  19,  21,  22,  27,  31,  32,
         35,  36,  45,  47,  48,  50,  51,  56,  61,  65,  66,  67,  68,  69,  73,  78,
         79,  91,  92,  94,  111, 112, 113, 115, 116, 117, 118, 119, 120, 123, 124, 125,
         127, 131, 132, 134, 140, 145, 146, 160, 166, 168, 174, 175, 180, 183});
}

/// "ieee24" or "ieee118".
inline PmuPlan builtin_plan(const std::string& name) {
    if (name == "ieee24") return ieee24_plan();
    if (name == "ieee118") return ieee118_plan();
    throw ValidationError("unknown built-in PMU plan '" + name + "'");
}

}  // namespace pmufdi
