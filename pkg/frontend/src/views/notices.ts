// Dismissible error notices for surfaced API failures.

import * as d3 from "d3";
import { ApiError } from "../api";

export class NoticeArea {
  private root: d3.Selection<HTMLElement, unknown, null, undefined>;

  constructor(container: HTMLElement) {
    this.root = d3.select(container).classed("notice-area", true);
  }

  show(error: unknown): void {
    const message =
      error instanceof ApiError
        ? `${error.code}: ${error.message}`
        : String(error);
    const notice = this.root.append("div").attr("class", "notice");
    notice.append("span").text(message);
    notice
      .append("button")
      .attr("class", "dismiss")
      .text("x")
      .on("click", () => notice.remove());
  }
}
