# @file text_table.py
#
# Copyright (C) jointconsistency contributors 2026
# Distributed under the terms of the COPYING file at the root of this
# repository.

# Class that constructs a plain-text document consisting of a number of simple
# column-aligned tables, used for sweep summaries.

RULE_CHAR = "-"
COLUMN_GAP = "  "


class TextTableContent(object):
    def __init__(self):
        self._text = ""
        self._columns = None
        self._rows = None
        self._align_right = None

    def begin_section(self, doc_title):
        self._text += doc_title + "\n"
        self._text += "=" * len(doc_title) + "\n\n"

    def begin_table(self, title, columns, align_right=None):
        """Start a table. align_right flags the numeric columns."""
        self._text += title + "\n\n"
        self._columns = [str(c) for c in columns]
        self._rows = []
        self._align_right = list(align_right or [False] * len(columns))

    def add_table_entry(self, data):
        if len(data) != len(self._columns):
            raise ValueError("Row has {} values for {} columns".format(len(data), len(self._columns)))
        self._rows.append(["" if value is None else str(value) for value in data])

    def end_table(self):
        widths = [len(c) for c in self._columns]
        for row in self._rows:
            widths = [max(w, len(v)) for w, v in zip(widths, row)]

        def render(values):
            cells = []
            for value, width, right in zip(values, widths, self._align_right):
                cells.append(value.rjust(width) if right else value.ljust(width))
            return COLUMN_GAP.join(cells).rstrip() + "\n"

        self._text += render(self._columns)
        self._text += COLUMN_GAP.join(RULE_CHAR * w for w in widths) + "\n"
        for row in self._rows:
            self._text += render(row)
        self._text += "\n"
        self._columns = self._rows = self._align_right = None

    def end_section(self):
        self._text = self._text.rstrip("\n") + "\n"

    @property
    def text(self):
        return self._text
