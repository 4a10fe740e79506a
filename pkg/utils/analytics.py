import pandas as pd
import plotly.graph_objects as go


class SweepAnalytics:
    def __init__(self, summary):
        self.summary = summary

    def pcr_series(self, variant):
        """PCR indexed by sparsity for one variant"""
        rows = self.summary[self.summary['variant'] == variant].sort_values('sparsity')
        return pd.Series(rows['pcr'].to_numpy(), index=rows['sparsity'].to_numpy(), name=variant)

    def _half_widths(self, variant):
        rows = self.summary[self.summary['variant'] == variant].sort_values('sparsity')
        return pd.Series(rows['pcr_half_width'].to_numpy(), index=rows['sparsity'].to_numpy())

    def check_pcr_ordering(self, better='sipa', worse='fipa'):
        """Sparsities where PCR(better) falls more than one half-width below PCR(worse)"""
        gap = self.pcr_series(worse) - self.pcr_series(better)
        slack = self._half_widths(worse)
        return [float(s) for s in gap.index if gap[s] > slack[s]]

    def check_pcr_monotone(self, variant):
        """Sparsity steps where PCR rises by more than one half-width"""
        pcr = self.pcr_series(variant)
        slack = self._half_widths(variant)
        rises = []
        for prev, cur in zip(pcr.index, pcr.index[1:]):
            if pcr[cur] - pcr[prev] > max(slack[prev], slack[cur]):
                rises.append((float(prev), float(cur)))
        return rises

    def create_pcr_figure(self, title="Reconstruction performance"):
        """PCR against sparsity, one line per variant with 95% error bars"""
        fig = go.Figure()
        for variant in sorted(self.summary['variant'].unique()):
            pcr = self.pcr_series(variant)
            fig.add_trace(go.Scatter(
                x=pcr.index, y=pcr.to_numpy(), mode='lines+markers', name=variant.upper(),
                error_y=dict(type='data', array=self._half_widths(variant).to_numpy(), visible=True),
            ))
        fig.update_layout(
            title=title,
            xaxis_title="sparsity k/n",
            yaxis_title="PCR",
            yaxis=dict(range=[0, 1.05]),
        )
        return fig

    def save_pcr_figure(self, path, title="Reconstruction performance"):
        self.create_pcr_figure(title).write_html(str(path), include_plotlyjs='cdn')
        return path
