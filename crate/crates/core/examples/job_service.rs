//! Start the job service in-process, submit an annealing job for a circle
//! and poll it to completion.
//!
//! Usage: `cargo run --release --example job_service`

use std::time::Duration;

use linkforge::geometry::Vec2;
use linkforge::service::{serve, JobView, ServiceConfig};
use serde_json::json;

#[tokio::main]
async fn main() {
    let listener = tokio::net::TcpListener::bind("127.0.0.1:0").await.unwrap();
    let base = format!("http://{}", listener.local_addr().unwrap());
    tokio::spawn(serve(listener, ServiceConfig::default().with_env()));

    let points: Vec<Vec2> = (0..40)
        .map(|i| Vec2::from_angle(std::f64::consts::TAU * i as f64 / 40.0) * 3.0)
        .collect();
    let request = json!({ "target": { "points": points }, "solver": "sa", "seed": 1, "budget": { "iterations": 20000 } });
    let client = reqwest::Client::new();
    let created: serde_json::Value = client
        .post(format!("{base}/api/jobs"))
        .json(&request)
        .send()
        .await
        .unwrap()
        .json()
        .await
        .unwrap();
    let id = created["id"].as_str().unwrap();
    println!("submitted {id}");

    loop {
        let job: JobView = client
            .get(format!("{base}/api/jobs/{id}"))
            .send()
            .await
            .unwrap()
            .json()
            .await
            .unwrap();
        println!("{:?}, {} incumbents", job.state, job.incumbents.len());
        if job.state.is_terminal() {
            break;
        }
        tokio::time::sleep(Duration::from_millis(200)).await;
    }
    let solution: serde_json::Value = client
        .get(format!("{base}/api/jobs/{id}/solution"))
        .send()
        .await
        .unwrap()
        .json()
        .await
        .unwrap();
    println!("objective {}", solution["objective"]["total"]);
}
