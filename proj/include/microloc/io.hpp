#pragma once

#include <iosfwd>
#include <string>
#include <vector>

#include "json.hpp"
#include "microloc/flow.hpp"
#include "microloc/hadamard.hpp"
#include "microloc/spin.hpp"
#include "microloc/wfdetect.hpp"

namespace microloc {

using Json = nlohmann::json;  // std::map objects, so keys come out sorted

// 17 significant digits in scientific notation, '.' decimal point.
std::string format_double(double v);

// tau,x0..x3,xi0..xi3,q then w<k>_re,w<k>_im per fibre component.
std::string strip_csv_header(size_t fibre_components);
void write_strip_csv(std::ostream& os, const BicharStrip& strip);
void write_strip_csv(std::ostream& os, const PolarizedStrip& strip);

Json to_json(const BicharStrip& strip);
Json to_json(const PolarizedStrip& strip);
Json to_json(const WFElement& e);
Json to_json(const PolElement& e);
Json to_json(const WFEntry& e);
Json to_json(const PolEntry& e);
Json to_json(const WFReport& r);
Json to_json(const DetectorConfig& c);

// x0[,x1] then c<k>_re,c<k>_im; rows ordered with x0 fastest.
void write_sample_csv(std::ostream& os, const Sample& s);
// Grid spacing and counts are recovered from the coordinate columns, which
// must form a uniform grid.
Sample read_sample_csv(std::istream& is, const std::string& name = "csv");
Sample read_sample_csv_file(const std::string& path);
// WFEntry rows: base0,base1,sector,angle,slope,residual,upper_slope,verdict
void write_detect_csv(std::ostream& os, const WFReport& r);

// x0..x3 then s<k>_re,s<k>_im for the four spinor components; x3 fastest.
void write_spinor_field_csv(std::ostream& os, const SpinorField& f);
SpinorField read_spinor_field_csv(std::istream& is);

// Stable text for files: two-space indentation, trailing newline.
std::string dump_json(const Json& j);

}  // namespace microloc
