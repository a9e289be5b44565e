#include "fkbench/io.hpp"

#include "fkbench/errors.hpp"

#include <fstream>

namespace fkbench {

namespace {

Vector vector_from_json(const nlohmann::json& j)
{
    const auto values = j.get<std::vector<double>>();
    return Eigen::Map<const Vector>(values.data(), static_cast<Eigen::Index>(values.size()));
}

Matrix matrix_from_json(const nlohmann::json& j)
{
    const auto rows = j.get<std::vector<std::vector<double>>>();
    if (rows.empty())
        return Matrix();
    Matrix m(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(rows.front().size()));
    for (std::size_t r = 0; r < rows.size(); ++r)
    {
        if (rows[r].size() != rows.front().size())
            throw ShapeMismatch("ragged kernel row " + std::to_string(r));
        for (std::size_t c = 0; c < rows[r].size(); ++c)
            m(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) = rows[r][c];
    }
    return m;
}

} // namespace

nlohmann::json vector_to_json(const Vector& v)
{
    return std::vector<double>(v.data(), v.data() + v.size());
}

nlohmann::json matrix_to_json(const Matrix& m)
{
    nlohmann::json rows = nlohmann::json::array();
    for (Eigen::Index r = 0; r < m.rows(); ++r)
    {
        const Vector row = m.row(r).transpose();
        rows.push_back(vector_to_json(row));
    }
    return rows;
}

nlohmann::json model_to_json(const FeynmanKacModel& model, const McKeanSpec& spec)
{
    nlohmann::json j;
    j["horizon"] = model.horizon;
    j["dims"] = model.dims;
    j["kernels"] = nlohmann::json::array();
    for (const auto& k : model.kernels)
        j["kernels"].push_back(matrix_to_json(k));
    j["potentials"] = nlohmann::json::array();
    for (const auto& g : model.potentials)
        j["potentials"].push_back(vector_to_json(g));
    j["eta0"] = vector_to_json(model.eta0);
    j["epsilons"] = spec.epsilons;
    return j;
}

void model_from_json(const nlohmann::json& j, FeynmanKacModel& model, McKeanSpec& spec)
{
    try
    {
        model.horizon = j.at("horizon").get<int>();
        model.dims = j.at("dims").get<std::vector<int>>();
        model.kernels.clear();
        for (const auto& k : j.at("kernels"))
            model.kernels.push_back(matrix_from_json(k));
        model.potentials.clear();
        for (const auto& g : j.at("potentials"))
            model.potentials.push_back(vector_from_json(g));
        model.eta0 = vector_from_json(j.at("eta0"));
        if (j.contains("epsilons"))
            spec.epsilons = j.at("epsilons").get<std::vector<double>>();
        else
            spec = McKeanSpec::constant(model.horizon, 0.0);
    }
    catch (const nlohmann::json::exception& e)
    {
        throw InvalidArgument(std::string("malformed model JSON: ") + e.what());
    }
    validate_model(model);
    validate_spec(model, spec);
}

nlohmann::json function_to_json(const TestFunction& f)
{
    nlohmann::json j;
    j["values"] = nlohmann::json::array();
    for (const auto& v : f.values)
        j["values"].push_back(vector_to_json(v));
    return j;
}

TestFunction function_from_json(const nlohmann::json& j)
{
    TestFunction f;
    try
    {
        for (const auto& v : j.at("values"))
            f.values.push_back(vector_from_json(v));
    }
    catch (const nlohmann::json::exception& e)
    {
        throw InvalidArgument(std::string("malformed function JSON: ") + e.what());
    }
    return f;
}

nlohmann::json read_json_file(const std::filesystem::path& path)
{
    std::ifstream in(path);
    if (!in)
        throw InvalidArgument("cannot open " + path.string());
    try
    {
        return nlohmann::json::parse(in);
    }
    catch (const nlohmann::json::parse_error& e)
    {
        throw InvalidArgument("cannot parse " + path.string() + ": " + e.what());
    }
}

} // namespace fkbench
