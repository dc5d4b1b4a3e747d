/*
 Copyright 2026 The epicontrol Authors

 Licensed under the Apache License, Version 2.0 (the "License");
 you may not use this file except in compliance with the License.
 You may obtain a copy of the License at

      https://www.apache.org/licenses/LICENSE-2.0

 Unless required by applicable law or agreed to in writing, software
 distributed under the License is distributed on an "AS IS" BASIS,
 WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 See the License for the specific language governing permissions and
 limitations under the License.
*/

#ifndef EPICONTROL_TESTS_REFERENCE_TABLES_HPP
#define EPICONTROL_TESTS_REFERENCE_TABLES_HPP

// Published comparison tables for Italy, Sept and Oct 2020: real counts, the
// uncontrolled and controlled model values, and the printed percentages.

#include <array>
#include <string_view>

namespace reference {

struct Row {
    int day;
    double real;
    double uncontrolled;
    double controlled;
    double eta;         // printed, percent
    double improvement; // printed, percent
};

struct Table {
    std::string_view name;
    char series;
    int month;
    std::array<Row, 7> rows;
};

inline constexpr std::array<Table, 6> kTables{{
    {"R Sept", 'R', 9,
     {{{1, 207944, 207944, 207944, 0.00, 0.00},
       {5, 209610, 207996, 236134, 0.77, 12.65},
       {10, 211885, 209176, 238769, 1.27, 12.68},
       {15, 214645, 211897, 240170, 1.28, 11.89},
       {20, 218351, 214873, 241363, 1.59, 10.53},
       {25, 222716, 218150, 242306, 2.05, 8.79},
       {30, 227704, 221973, 243000, 2.51, 6.71}}}},
    {"R Oct", 'R', 10,
     {{{1, 222832, 224334, 243132, 0.67, 9.11},
       {5, 232681, 226703, 243647, 2.56, 4.71},
       {10, 238525, 232871, 244263, 2.37, 2.40},
       {15, 245964, 241255, 244857, 1.91, 0.45},
       {20, 255005, 252990, 245433, 0.79, 3.75},
       {25, 266203, 269718, 245994, 1.32, 7.59},
       {29, 279282, 288247, 246401, 3.21, 11.77}}}},
    {"D Sept", 'D', 9,
     {{{1, 35491, 35491, 35491, 0.00, 0.00},
       {5, 35541, 35510, 35495, 0.08, 0.12},
       {10, 35597, 35538, 35496, 0.16, 0.28},
       {15, 35645, 35570, 35496, 0.21, 0.41},
       {20, 35724, 35606, 35496, 0.33, 0.63},
       {25, 35818, 35648, 35496, 0.47, 0.89},
       {30, 35918, 35702, 35497, 0.60, 1.17}}}},
    {"D Oct", 'D', 10,
     {{{1, 35941, 35715, 35497, 0.00, 0.00},
       {5, 36030, 35773, 35497, 0.71, 1.47},
       {10, 36166, 35870, 35497, 0.81, 1.84},
       {15, 36427, 36008, 35497, 1.15, 2.55},
       {20, 36832, 36206, 35497, 1.69, 3.62},
       {25, 37479, 36491, 35497, 2.63, 5.28},
       {29, 38321, 37003, 35498, 3.43, 7.36}}}},
    {"Q Sept", 'Q', 9,
     {{{1, 26754, 26754, 26754, 0.00, 0.00},
       {5, 31194, 29264, 1023, 6.18, 96.69},
       {10, 35708, 31105, 337, 12.89, 99.05},
       {15, 39712, 32183, 228, 18.95, 99.42},
       {20, 44098, 34808, 176, 21.06, 99.60},
       {25, 47718, 39848, 149, 16.49, 99.68},
       {30, 51263, 48428, 134, 5.53, 99.73}}}},
    {"Q Oct", 'Q', 10,
     {{{1, 52647, 50023, 130, 4.98, 99.75},
       {5, 58903, 62193, 124, 5.58, 99.78},
       {10, 74829, 83557, 119, 11.63, 99.84},
       {15, 99266, 116035, 116, 16.89, 99.88},
       {20, 142739, 164668, 112, 15.36, 99.92},
       {25, 222241, 236520, 109, 6.42, 99.95},
       {29, 299191, 317055, 107, 5.97, 99.96}}}},
}};

} // namespace reference

#endif
