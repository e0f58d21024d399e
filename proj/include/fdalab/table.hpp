// SPDX-License-Identifier: Apache-2.0
//
// fdalab: reference-background residual laboratory for single-snapshot FDA-MIMO-GPR
// Copyright (C) 2026 The fdalab Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
// http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.
// ------------------------------------------------------------------------


#ifndef FDALAB_TABLE_HPP
#define FDALAB_TABLE_HPP

#include "common.hpp"
#include "stats.hpp"

#include "json.hpp"

#include <algorithm>
#include <atomic>
#include <cstdint>
#include <cstdlib>
#include <cstring>
#include <exception>
#include <filesystem>
#include <fstream>
#include <optional>
#include <string>
#include <thread>
#include <variant>
#include <vector>

namespace fdalab
{
    /// Key cell: text, number, or null.
    using KeyValue = std::variant<std::monostate, std::string, double>;

    inline bool key_less(const KeyValue &a, const KeyValue &b)
    {
        if (a.index() != b.index())
            return a.index() < b.index();
        if (std::holds_alternative<std::string>(a))
            return std::get<std::string>(a) < std::get<std::string>(b);
        if (std::holds_alternative<double>(a))
            return std::get<double>(a) < std::get<double>(b);
        return false;
    }

    struct MetricRow
    {
        std::vector<KeyValue> keys;
        std::vector<std::optional<double>> values; ///< nullopt is written as null
    };

    struct Table
    {
        std::string name;
        std::vector<std::string> key_columns;
        std::vector<std::string> metric_columns;
        std::vector<MetricRow> rows;

        void add(MetricRow row)
        {
            if (row.keys.size() != key_columns.size() || row.values.size() != metric_columns.size())
                throw std::logic_error("table '" + name + "': row width mismatch");
            rows.push_back(std::move(row));
        }

        std::size_t column(const std::string &metric) const
        {
            const auto it = std::find(metric_columns.begin(), metric_columns.end(), metric);
            if (it == metric_columns.end())
                throw std::out_of_range("table '" + name + "': no column '" + metric + "'");
            return std::size_t(it - metric_columns.begin());
        }

        std::size_t key_column(const std::string &key) const
        {
            const auto it = std::find(key_columns.begin(), key_columns.end(), key);
            if (it == key_columns.end())
                throw std::out_of_range("table '" + name + "': no key '" + key + "'");
            return std::size_t(it - key_columns.begin());
        }

        /// Sorts rows by key tuple; throws if a key tuple repeats.
        void sort_rows()
        {
            auto less = [](const MetricRow &a, const MetricRow &b) {
                return std::lexicographical_compare(a.keys.begin(), a.keys.end(), b.keys.begin(), b.keys.end(), key_less);
            };
            std::stable_sort(rows.begin(), rows.end(), less);
            for (std::size_t i = 1; i < rows.size(); ++i)
                if (!less(rows[i - 1], rows[i]))
                    throw std::logic_error("table '" + name + "': duplicate key tuple");
        }
    };

    inline std::string format_cell(const std::optional<double> &v)
    {
        if (!v)
            return "null";
        return format_double(*v);
    }

    inline std::string format_key(const KeyValue &k)
    {
        if (std::holds_alternative<std::string>(k))
            return std::get<std::string>(k);
        if (std::holds_alternative<double>(k))
            return format_double(std::get<double>(k));
        return "null";
    }

    inline std::string table_to_csv(const Table &t)
    {
        std::string out;
        bool first = true;
        for (const auto &c : t.key_columns)
            out += (first ? "" : ",") + c, first = false;
        for (const auto &c : t.metric_columns)
            out += (first ? "" : ",") + c, first = false;
        out += '\n';
        for (const auto &r : t.rows)
        {
            first = true;
            for (const auto &k : r.keys)
                out += (first ? "" : ",") + format_key(k), first = false;
            for (const auto &v : r.values)
                out += (first ? "" : ",") + format_cell(v), first = false;
            out += '\n';
        }
        return out;
    }

    inline std::string table_to_json(const Table &t)
    {
        nlohmann::ordered_json arr = nlohmann::ordered_json::array();
        for (const auto &r : t.rows)
        {
            nlohmann::ordered_json o;
            for (std::size_t i = 0; i < r.keys.size(); ++i)
            {
                const auto &k = r.keys[i];
                if (std::holds_alternative<std::string>(k))
                    o[t.key_columns[i]] = std::get<std::string>(k);
                else if (std::holds_alternative<double>(k))
                    o[t.key_columns[i]] = std::get<double>(k);
                else
                    o[t.key_columns[i]] = nullptr;
            }
            for (std::size_t i = 0; i < r.values.size(); ++i)
            {
                const auto &v = r.values[i];
                if (!v)
                    o[t.metric_columns[i]] = nullptr;
                else if (std::isfinite(*v))
                    o[t.metric_columns[i]] = *v;
                else
                    o[t.metric_columns[i]] = format_double(*v);
            }
            arr.push_back(std::move(o));
        }
        return arr.dump(1) + "\n";
    }

    inline void write_text_file(const std::filesystem::path &path, const std::string &text)
    {
        std::ofstream out(path, std::ios::binary | std::ios::trunc);
        if (!out)
            throw std::runtime_error("cannot open '" + path.string() + "' for writing");
        out << text;
        if (!out)
            throw std::runtime_error("write failed for '" + path.string() + "'");
    }

    /// Median; even counts use the mean of the two central order statistics.
    inline std::optional<double> median(std::vector<double> v)
    {
        if (v.empty())
            return std::nullopt;
        std::sort(v.begin(), v.end());
        const std::size_t n = v.size();
        return n % 2 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
    }

    // ---------------------------------------------------------------------------------------------
    // Seeding and work pool
    // ---------------------------------------------------------------------------------------------

    inline std::uint64_t splitmix64(std::uint64_t x)
    {
        x += 0x9E3779B97F4A7C15ull;
        x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ull;
        x = (x ^ (x >> 27)) * 0x94D049BB133111EBull;
        return x ^ (x >> 31);
    }

    /// Per-sample stream seed from the case coordinates; independent of sweep order.
    inline std::uint64_t stream_seed(std::uint64_t master, std::uint64_t scene, std::uint64_t reference,
                                     std::uint64_t pattern, double delta_f, std::uint64_t sample_index)
    {
        std::uint64_t df_bits = 0;
        static_assert(sizeof(double) == sizeof(std::uint64_t));
        std::memcpy(&df_bits, &delta_f, sizeof(double));
        std::uint64_t h = splitmix64(master);
        for (std::uint64_t v : {scene, reference, pattern, df_bits, sample_index})
            h = splitmix64(h ^ v);
        return h;
    }

    /// Worker count: hardware concurrency capped by FDA_LAB_THREADS.
    inline std::size_t pool_size()
    {
        std::size_t n = std::max(1u, std::thread::hardware_concurrency());
        if (const char *env = std::getenv("FDA_LAB_THREADS"))
        {
            char *end = nullptr;
            const long v = std::strtol(env, &end, 10);
            if (end != env && *end == '\0' && v >= 1)
                n = std::min(n, std::size_t(v));
        }
        return n;
    }

    /// Runs fn(i) for i in [0, count). The exception of the lowest failing index is rethrown.
    template <class Fn>
    void parallel_for(std::size_t count, Fn &&fn)
    {
        const std::size_t workers = std::min(pool_size(), count);
        std::vector<std::exception_ptr> errors(count);
        std::atomic<std::size_t> next{0};
        auto work = [&] {
            for (std::size_t i = next++; i < count; i = next++)
            {
                try
                {
                    fn(i);
                }
                catch (...)
                {
                    errors[i] = std::current_exception();
                }
            }
        };
        if (workers <= 1)
            work();
        else
        {
            std::vector<std::thread> pool;
            for (std::size_t w = 0; w < workers; ++w)
                pool.emplace_back(work);
            for (auto &t : pool)
                t.join();
        }
        for (auto &e : errors)
            if (e)
                std::rethrow_exception(e);
    }

} // namespace fdalab

#endif // FDALAB_TABLE_HPP
