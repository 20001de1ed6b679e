#pragma once

#include <limits>
#include <span>
#include <vector>

namespace auscult::stats {

inline constexpr double kNa = std::numeric_limits<double>::quiet_NaN();

double mean(std::span<const double> v);
// Population standard deviation (divides by n).
double stdev_pop(std::span<const double> v);
// Sample standard deviation (divides by n-1); NA for n < 2.
double stdev_sample(std::span<const double> v);
// Moment skewness / excess kurtosis; (near-)constant input maps to 0 so that
// silent frames do not flood the feature table with NA.
double skewness(std::span<const double> v);
double kurtosis_excess(std::span<const double> v);
double minimum(std::span<const double> v);
double maximum(std::span<const double> v);
// Percentile in [0,100] with linear interpolation between order statistics.
double percentile(std::span<const double> v, double p);
double median(std::span<const double> v);
// Least-squares slope of v against its 0-based index.
double index_slope(std::span<const double> v);
// Mean absolute first difference; 0 for a single element.
double abs_diff_mean(std::span<const double> v);
// Population std of first differences; 0 for a single element.
double diff_stdev(std::span<const double> v);

}  // namespace auscult::stats
