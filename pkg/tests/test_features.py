import json

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from phishgrab import store
from phishgrab.errors import MissingHtml
from phishgrab.features import (
    FEATURE_NAMES,
    RESULT_COLUMN,
    FeatureVector,
    IntelligenceReport,
    OfflineIntelligence,
    StaticIntelligence,
    content_features,
    extract_feature_vector,
    feature_vector_for_page,
    thirdparty_features,
    url_features,
    write_matrix_csv,
)
from phishgrab.ingest import UrlRecord

from goldens import FULL_GOOD, GOLDENS

URL_NAMES = {
    "having_IP_Address", "URL_Length", "Shortining_Service", "having_At_Symbol",
    "double_slash_redirecting", "Prefix_Suffix", "having_Sub_Domain", "port",
    "HTTPS_token",
}
CONTENT_NAMES = {
    "Favicon", "Request_URL", "URL_of_Anchor", "Links_in_tags", "SFH",
    "Submitting_to_email", "Abnormal_URL", "Redirect", "on_mouseover",
    "RightClick", "popUpWidnow", "Iframe",
}
THIRDPARTY_NAMES = set(FEATURE_NAMES) - URL_NAMES - CONTENT_NAMES

PAGE = "http://site.example/"


def _record(url="https://example.com/", label="legitimate"):
    return UrlRecord(sample_id="s1", url=url, label=label, source="csv_feed")


class TestSchema:
    def test_thirty_unique_names(self):
        assert len(FEATURE_NAMES) == 30
        assert len(set(FEATURE_NAMES)) == 30

    def test_groups_partition_the_schema(self):
        assert URL_NAMES | CONTENT_NAMES | THIRDPARTY_NAMES == set(FEATURE_NAMES)
        assert len(URL_NAMES) == 9 and len(CONTENT_NAMES) == 12 and len(THIRDPARTY_NAMES) == 9

    def test_each_group_emits_exactly_its_names(self):
        assert set(url_features("https://example.com/")) == URL_NAMES
        assert set(content_features("<p></p>", PAGE)) == CONTENT_NAMES
        assert set(thirdparty_features(PAGE, IntelligenceReport())) == THIRDPARTY_NAMES


class TestGoldens:
    @pytest.mark.parametrize("golden", GOLDENS, ids=lambda g: g.name)
    def test_golden_vector(self, golden):
        record = UrlRecord(
            sample_id=golden.name, url=golden.url, label=golden.label, source="csv_feed",
        )
        vector = feature_vector_for_page(
            record, golden.html,
            report=golden.report,
            redirect_hops=golden.redirect_hops,
            external_js=golden.external_js,
        )
        diffs = {
            name: (vector.values[name], golden.expected[name])
            for name in FEATURE_NAMES
            if vector.values[name] != golden.expected[name]
        }
        assert not diffs, f"{golden.name}: got != expected for {diffs}"
        assert vector.label == (1 if golden.label == "legitimate" else -1)


class TestUrlRules:
    def test_embedded_double_slash(self):
        assert url_features("http://a.example/p//q")["double_slash_redirecting"] == -1

    def test_scheme_double_slash_is_fine(self):
        assert url_features("https://a.example/p/q")["double_slash_redirecting"] == 1

    def test_at_symbol_anywhere(self):
        assert url_features("http://a.example/x?u=bob@mail")["having_At_Symbol"] == -1

    def test_shortener_with_path_host_match(self):
        assert url_features("https://tinyurl.com/abc")["Shortining_Service"] == -1

    def test_deep_subdomain_chain(self):
        assert url_features("http://a.b.c.example.com/")["having_Sub_Domain"] == -1

    def test_dash_in_subdomain_only_is_fine(self):
        # the dash rule looks at the registrable domain, not the full host
        assert url_features("http://my-cdn.example.com/")["Prefix_Suffix"] == 1

    def test_standard_ports_are_fine(self):
        assert url_features("http://a.example:80/")["port"] == 1
        assert url_features("https://a.example:443/")["port"] == 1


class TestContentRules:
    def _anchors(self, hrefs):
        body = "".join(f'<a href="{h}">x</a>' for h in hrefs)
        return content_features(f"<html><body>{body}</body></html>", PAGE)

    def test_anchor_two_thirds_is_still_suspicious(self):
        # 2/3 = 0.6667 sits exactly on the <= 0.67 edge of the middle band
        feats = self._anchors(["#", "#", "/ok"])
        assert feats["URL_of_Anchor"] == 0

    def test_anchor_three_quarters_is_phishing(self):
        feats = self._anchors(["#", "#", "javascript:void(0)", "/ok"])
        assert feats["URL_of_Anchor"] == -1

    def test_anchor_quarter_is_fine(self):
        feats = self._anchors(["http://other.example/", "/a", "/b", "/c"])
        assert feats["URL_of_Anchor"] == 1

    def test_mailto_anchor_counts_only_in_denominator(self):
        # one cross-domain of two total -> 0.5, the mailto is neither safe nor unsafe
        feats = self._anchors(["mailto:x@y", "http://other.example/"])
        assert feats["URL_of_Anchor"] == 0

    def test_empty_href_is_unsafe(self):
        feats = self._anchors(["", "/a", "/b"])
        assert feats["URL_of_Anchor"] == 0  # 1/3

    def _images(self, cross, same):
        tags = "".join(f'<img src="http://other.example/i{i}.png">' for i in range(cross))
        tags += "".join(f'<img src="/i{i}.png">' for i in range(same))
        return content_features(f"<body>{tags}</body>", PAGE)["Request_URL"]

    def test_request_band_edges(self):
        assert self._images(2, 7) == 0    # 2/9 = 0.2222 just above 0.22
        assert self._images(1, 4) == 1    # 0.2 just below
        assert self._images(5, 3) == -1   # 0.625 just above 0.61
        assert self._images(0, 3) == 1

    def _links(self, cross_scripts, same_scripts):
        tags = "".join(
            f'<script src="http://other.example/s{i}.js"></script>'
            for i in range(cross_scripts)
        )
        tags += "".join(f'<script src="/s{i}.js"></script>' for i in range(same_scripts))
        return content_features(f"<head>{tags}</head>", PAGE)["Links_in_tags"]

    def test_links_band_edges(self):
        assert self._links(4, 1) == 0   # 0.8 <= 0.81
        assert self._links(5, 1) == -1  # 0.833
        assert self._links(1, 5) == 1   # 0.167 < 0.17

    def test_fallback_favicon_stays_out_of_links(self):
        # one cross-domain script is the only link element; the /favicon.ico
        # probe must not dilute the 1/1 fraction
        html = '<head><script src="http://other.example/s.js"></script></head>'
        feats = content_features(html, PAGE)
        assert feats["Links_in_tags"] == -1
        assert feats["Favicon"] == 1

    def test_form_without_action_attribute(self):
        feats = content_features("<form><input></form>", PAGE)
        assert feats["SFH"] == -1

    def test_no_forms_is_clean(self):
        feats = content_features("<p>hi</p>", PAGE)
        assert feats["SFH"] == 1
        assert feats["Submitting_to_email"] == 1

    def test_mailto_form_flags_email_and_unverifiable_handler(self):
        feats = content_features('<form action="mailto:a@b"></form>', PAGE)
        assert feats["Submitting_to_email"] == -1
        assert feats["SFH"] == 0

    def test_worst_form_wins(self):
        html = '<form action="/ok"></form><form action="http://other.example/x"></form>'
        assert content_features(html, PAGE)["SFH"] == 0

    @pytest.mark.parametrize("hops,score", [(0, 1), (1, 1), (2, 0), (3, 0), (4, -1), (9, -1)])
    def test_redirect_bands(self, hops, score):
        assert content_features("<p></p>", PAGE, redirect_hops=hops)["Redirect"] == score

    def test_abnormal_url_ignores_www_prefix(self):
        html = "<p>welcome to shop.example</p>"
        feats = content_features(html, "http://www.shop.example/")
        assert feats["Abnormal_URL"] == 1

    def test_abnormal_url_missing_host(self):
        feats = content_features("<p>nothing to see</p>", PAGE)
        assert feats["Abnormal_URL"] == -1

    def test_host_match_is_case_insensitive(self):
        feats = content_features("<p>SITE.EXAMPLE</p>", PAGE)
        assert feats["Abnormal_URL"] == 1

    @pytest.mark.parametrize("snippet,name", [
        ('<div onmouseover="steal()">', "on_mouseover"),
        ("<script>if (event.button == 2) {}</script>", "RightClick"),
        ("<script>document.oncontextmenu = block;</script>", "RightClick"),
        ("<script>window.open('/popup')</script>", "popUpWidnow"),
        ("<script>showModalDialog('/d')</script>", "popUpWidnow"),
        ("<script>var p = prompt('pin');</script>", "popUpWidnow"),
        ('<iframe src="/f"></iframe>', "Iframe"),
        ('<frame src="/f">', "Iframe"),
    ])
    def test_script_pattern_hits(self, snippet, name):
        assert content_features(f"<body>{snippet}</body>", PAGE)[name] == -1

    def test_spaced_mouseover_still_matches(self):
        assert content_features('<a onmouseover ="x">', PAGE)["on_mouseover"] == -1

    def test_form_tag_is_not_an_iframe(self):
        assert content_features('<form action="/ok"></form>', PAGE)["Iframe"] == 1

    def test_external_js_joins_the_corpus(self):
        feats = content_features(
            "<p>clean page</p>", PAGE, external_js=["window.open('/x');"],
        )
        assert feats["popUpWidnow"] == -1

    def test_patterns_found_in_inline_scripts(self):
        html = "<script>prompt('password');</script>"
        assert content_features(html, PAGE)["popUpWidnow"] == -1


class TestThirdpartyRules:
    def _one(self, url=PAGE, **fields):
        return thirdparty_features(url, IntelligenceReport(**fields))

    def test_all_unknown_is_all_zero_except_plain_http(self):
        feats = self._one()
        assert feats["SSLfinal_State"] == -1  # scheme alone decides
        assert all(feats[n] == 0 for n in THIRDPARTY_NAMES - {"SSLfinal_State"})

    @pytest.mark.parametrize("age,score", [(None, 0), (182, -1), (183, 1)])
    def test_domain_age_boundary(self, age, score):
        assert self._one(domain_age_days=age)["age_of_domain"] == score

    @pytest.mark.parametrize("days,score", [(None, 0), (364, -1), (365, 1)])
    def test_registration_boundary(self, days, score):
        assert self._one(registration_remaining_days=days)["Domain_registeration_length"] == score

    @pytest.mark.parametrize("rank,score", [
        (None, 0), (0, -1), (-5, -1), (1, 1), (100_000, 1), (100_001, 0),
    ])
    def test_traffic_bands(self, rank, score):
        assert self._one(traffic_rank=rank)["web_traffic"] == score

    @pytest.mark.parametrize("score_in,score", [(None, 0), (0.19, -1), (0.2, 1)])
    def test_page_rank_boundary(self, score_in, score):
        assert self._one(page_rank_score=score_in)["Page_Rank"] == score

    @pytest.mark.parametrize("count,score", [(None, 0), (0, -1), (1, 0), (2, 0), (3, 1)])
    def test_inbound_link_bands(self, count, score):
        assert self._one(inbound_link_count=count)["Links_pointing_to_page"] == score

    @pytest.mark.parametrize("flag,score", [(None, 0), (True, 1), (False, -1)])
    def test_dns_and_index(self, flag, score):
        assert self._one(has_dns_record=flag)["DNSRecord"] == score
        assert self._one(indexed_by_search=flag)["Google_Index"] == score

    @pytest.mark.parametrize("flag,score", [(None, 0), (True, -1), (False, 1)])
    def test_blacklist(self, flag, score):
        assert self._one(on_blacklist=flag)["Statistical_report"] == score

    @pytest.mark.parametrize("fields,score", [
        ({}, 0),                                                    # https, nothing known
        ({"cert_issuer_trusted": False}, 0),
        ({"cert_issuer_trusted": True}, 0),                         # trusted but age unknown
        ({"cert_issuer_trusted": True, "cert_age_days": 364}, 0),
        ({"cert_issuer_trusted": True, "cert_age_days": 365}, 1),
    ])
    def test_ssl_https_ladder(self, fields, score):
        assert self._one(url="https://site.example/", **fields)["SSLfinal_State"] == score

    def test_ssl_http_is_phishing_regardless(self):
        feats = self._one(cert_issuer_trusted=True, cert_age_days=1000)
        assert feats["SSLfinal_State"] == -1


class TestFeatureVector:
    def _values(self):
        return {name: 1 for name in FEATURE_NAMES}

    def test_row_order_matches_schema(self):
        values = self._values()
        values["URL_Length"] = -1
        vector = FeatureVector("s1", "http://a.example/", values, -1)
        row = vector.row()
        assert len(row) == 31
        assert row[FEATURE_NAMES.index("URL_Length")] == -1
        assert row[-1] == -1

    def test_missing_feature_rejected(self):
        values = self._values()
        del values["Iframe"]
        with pytest.raises(ValueError, match="Iframe"):
            FeatureVector("s1", "http://a.example/", values, 1)

    def test_extra_feature_rejected(self):
        values = self._values()
        values["Bogus"] = 1
        with pytest.raises(ValueError, match="Bogus"):
            FeatureVector("s1", "http://a.example/", values, 1)

    def test_non_ternary_rejected(self):
        values = self._values()
        values["SFH"] = 2
        with pytest.raises(ValueError, match="non-ternary"):
            FeatureVector("s1", "http://a.example/", values, 1)

    def test_bad_label_rejected(self):
        with pytest.raises(ValueError, match="label"):
            FeatureVector("s1", "http://a.example/", self._values(), 0)


class TestProviders:
    def test_offline_provider_knows_nothing(self):
        report = OfflineIntelligence().lookup("example.com")
        assert report == IntelligenceReport()

    def test_static_provider_roundtrip(self, tmp_path):
        path = tmp_path / "intel.json"
        path.write_text(json.dumps({
            "Example.COM": {"domain_age_days": 400, "has_dns_record": True},
        }), encoding="utf-8")
        intel = StaticIntelligence.from_json_file(path)
        report = intel.lookup("example.com")
        assert report.domain_age_days == 400
        assert report.has_dns_record is True
        assert intel.lookup("unknown.example") == IntelligenceReport()


class TestArchiveExtraction:
    def _archive(self, tmp_path, html=b"<p>site.example</p>", error=None,
                 external_js=None, with_html=True):
        root = tmp_path / "archive"
        root.mkdir(exist_ok=True)
        sample = store.init_sample_dir(root, "s1")
        refs = []
        if with_html and error is None:
            refs.append(store.write_resource(
                sample, store.KIND_HTML, "page", html, origin_url=PAGE,
            ))
        if external_js:
            refs.append(store.write_resource(
                sample, store.KIND_JS, "app.js", external_js, origin_url=PAGE + "app.js",
            ))
        manifest = store.SampleManifest(
            record=UrlRecord("s1", PAGE, "phishing", "csv_feed"),
            final_url=PAGE,
            fetched_at="2026-01-01T00:00:00+00:00",
            resources=refs,
            error=error,
            redirect_hops=2,
        )
        store.write_manifest(sample, manifest)
        return sample.path

    def test_extracts_from_manifest(self, tmp_path):
        path = self._archive(tmp_path)
        vector = extract_feature_vector(path)
        assert vector.sample_id == "s1"
        assert vector.label == -1
        assert vector.values["Abnormal_URL"] == 1
        assert vector.values["Redirect"] == 0  # hops come from the manifest

    def test_external_js_is_scanned(self, tmp_path):
        path = self._archive(tmp_path, external_js=b"document.oncontextmenu = no;")
        vector = extract_feature_vector(path)
        assert vector.values["RightClick"] == -1

    def test_inline_js_file_is_not_double_counted(self, tmp_path):
        # the inline.js artifact duplicates what the HTML already contains, so
        # the extractor must skip it; a pattern only there means a stale file
        root = tmp_path / "archive"
        root.mkdir()
        sample = store.init_sample_dir(root, "s1")
        refs = [
            store.write_resource(sample, store.KIND_HTML, "page",
                                 b"<p>site.example</p>", origin_url=PAGE),
            store.write_resource(sample, store.KIND_JS, "inline.js",
                                 b"window.open('/x');", origin_url=store.INLINE_ORIGIN),
        ]
        store.write_manifest(sample, store.SampleManifest(
            record=UrlRecord("s1", PAGE, "legitimate", "csv_feed"),
            final_url=PAGE, fetched_at="2026-01-01T00:00:00+00:00", resources=refs,
        ))
        vector = extract_feature_vector(sample.path)
        assert vector.values["popUpWidnow"] == 1

    def test_failed_archive_raises(self, tmp_path):
        path = self._archive(tmp_path, error="dns_failure")
        with pytest.raises(MissingHtml, match="dns_failure"):
            extract_feature_vector(path)

    def test_missing_landing_page_raises(self, tmp_path):
        path = self._archive(tmp_path, with_html=False)
        with pytest.raises(MissingHtml, match="landing page"):
            extract_feature_vector(path)

    def test_intel_provider_keys_on_final_host(self, tmp_path):
        path = self._archive(tmp_path)
        intel = StaticIntelligence({"site.example": FULL_GOOD})
        vector = extract_feature_vector(path, intel=intel)
        assert vector.values["age_of_domain"] == 1
        assert vector.values["DNSRecord"] == 1

    def test_explicit_report_wins_over_intel(self, tmp_path):
        path = self._archive(tmp_path)
        intel = StaticIntelligence({"site.example": FULL_GOOD})
        vector = extract_feature_vector(
            path, IntelligenceReport(has_dns_record=False), intel=intel,
        )
        assert vector.values["DNSRecord"] == -1
        assert vector.values["age_of_domain"] == 0


class TestMatrixCsv:
    def test_header_and_rows(self, tmp_path):
        record = _record(url="https://example.com/", label="phishing")
        vector = feature_vector_for_page(record, "<p>example.com</p>")
        path = tmp_path / "matrix.csv"
        write_matrix_csv(path, [vector])
        lines = path.read_text(encoding="utf-8").splitlines()
        assert lines[0] == ",".join(FEATURE_NAMES + [RESULT_COLUMN])
        cells = lines[1].split(",")
        assert len(cells) == 31
        assert cells[-1] == "-1"
        assert set(cells) <= {"-1", "0", "1"}


_URLISH = st.text(
    alphabet="abcxyz0123456789./-?=&@#_%~:", max_size=60,
).map(lambda s: "http://host.example/" + s)


class TestProperties:
    @given(url=_URLISH)
    @settings(max_examples=150, deadline=None)
    def test_url_features_total_and_ternary(self, url):
        feats = url_features(url)
        assert set(feats) == URL_NAMES
        assert all(v in (-1, 0, 1) for v in feats.values())

    @given(html=st.text(max_size=400))
    @settings(max_examples=100, deadline=None)
    def test_content_features_total_and_ternary(self, html):
        feats = content_features(html, PAGE)
        assert set(feats) == CONTENT_NAMES
        assert all(v in (-1, 0, 1) for v in feats.values())

    @given(
        age=st.none() | st.integers(-10, 10_000),
        rank=st.none() | st.integers(-10, 10_000_000),
        links=st.none() | st.integers(-10, 10_000),
        https=st.booleans(),
    )
    @settings(max_examples=100, deadline=None)
    def test_thirdparty_total_and_ternary(self, age, rank, links, https):
        url = ("https://" if https else "http://") + "h.example/"
        feats = thirdparty_features(url, IntelligenceReport(
            domain_age_days=age, traffic_rank=rank, inbound_link_count=links,
        ))
        assert set(feats) == THIRDPARTY_NAMES
        assert all(v in (-1, 0, 1) for v in feats.values())
