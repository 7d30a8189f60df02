from fairaudit.report.markdown import to_markdown
from fairaudit.report.serializer import from_json, report_schema, to_json, write_schema
from fairaudit.report.svg import ForestRow, SVGBuilder, emit_forest_svg, emit_histogram_svg, emit_scatter_svg

__all__ = [
    'to_json',
    'from_json',
    'report_schema',
    'write_schema',
    'to_markdown',
    'SVGBuilder',
    'ForestRow',
    'emit_histogram_svg',
    'emit_forest_svg',
    'emit_scatter_svg',
]
