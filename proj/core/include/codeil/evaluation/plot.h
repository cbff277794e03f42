#ifndef CODEIL_EVALUATION_PLOT_H_
#define CODEIL_EVALUATION_PLOT_H_

#include <string>
#include <vector>

namespace codeil::evaluation {

struct CsvTable {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;

  // Index of `name` in the header; throws DataError when absent.
  int Column(const std::string& name) const;
  double Number(size_t row, const std::string& name) const;
};

// Plain comma-separated text without quoting. `what` names the source in
// error messages.
CsvTable ParseCsv(const std::string& text, const std::string& what);

struct CurveSeries {
  std::string label;
  std::vector<double> q25, q50, q75;
};

// Median line with an interquartile band per series, step on the x axis.
// Non-finite values are clipped to the top of the axis.
std::string DeviationPlotSvg(const std::vector<CurveSeries>& series,
                             const std::string& title);

struct BoxGroup {
  std::string series;  // e.g. "code/nn"
  int size = 0;        // training set size
  std::vector<double> values;
};

// Box (quartiles), median bar and 1.5 IQR whiskers per group, grouped by
// size on the x axis and coloured by series.
std::string RmseBoxSvg(const std::vector<BoxGroup>& groups,
                       const std::string& title);

}  // namespace codeil::evaluation

#endif  // CODEIL_EVALUATION_PLOT_H_
